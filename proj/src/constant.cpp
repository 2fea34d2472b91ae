#include "symx/constant.hpp"

#include "symx/error.hpp"
#include "symx/hash.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <limits>

namespace symx {

namespace {

std::uint64_t hash_mpz(const mpz_class& z) {
  const mpz_srcptr raw = z.get_mpz_t();
  std::uint64_t h = mix64(static_cast<std::uint64_t>(static_cast<std::int64_t>(raw->_mp_size)));
  const int limbs = raw->_mp_size < 0 ? -raw->_mp_size : raw->_mp_size;
  for (int i = 0; i < limbs; ++i) h = hash_combine(h, static_cast<std::uint64_t>(raw->_mp_d[i]));
  return h;
}

double normalized(double d) {
  if (d == 0.0) return 0.0;
  if (std::isnan(d)) return std::numeric_limits<double>::quiet_NaN();
  return d;
}

// Exponents beyond this are left unfolded rather than materializing huge integers.
constexpr long kMaxFoldedExponent = 4096;

}  // namespace

namespace {

using Wide = __int128;

Wide wide_gcd(Wide a, Wide b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const Wide r = a % b;
    a = b;
    b = r;
  }
  return a;
}

bool fits64(Wide v) {
  return v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max();
}

}  // namespace

Constant::Constant(mpq_class value) : Constant(from_mpq([&] {
  value.canonicalize();
  return value;
}())) {}

Constant Constant::from_mpq(const mpq_class& q) {
  Constant c;
  if (q.get_num().fits_slong_p() && q.get_den().fits_slong_p()) {
    c.value_ = Small{q.get_num().get_si(), q.get_den().get_si()};
  } else {
    c.value_ = q;
  }
  return c;
}

std::optional<Constant> Constant::from_wide(Wide num, Wide den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const Wide g = wide_gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (!fits64(num) || !fits64(den)) return std::nullopt;
  Constant c;
  c.value_ = Small{static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
  return c;
}

mpq_class Constant::exact() const {
  if (const Small* s = small()) {
    mpq_class q;
    mpz_set_si(q.get_num_mpz_t(), s->num);
    mpz_set_si(q.get_den_mpz_t(), s->den);
    return q;
  }
  return std::get<mpq_class>(value_);
}

Constant Constant::rational(long num, long den) {
  if (den == 0) throw DomainError("rational with zero denominator");
  return Constant(mpq_class(mpz_class(num), mpz_class(den)));
}

Constant Constant::parse(const std::string& text) {
  if (text.find_first_of(".eEni") != std::string::npos) {
    double d = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), d);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw Error("invalid number literal '" + text + "'");
    return Constant(d);
  }
  mpq_class q;
  if (q.set_str(text, 10) != 0) throw Error("invalid number literal '" + text + "'");
  if (q.get_den() == 0) throw DomainError("rational with zero denominator");
  return Constant(std::move(q));
}

bool Constant::is_zero() const {
  if (const Small* s = small()) return s->num == 0;
  return is_exact() ? sgn(std::get<mpq_class>(value_)) == 0 : inexact() == 0.0;
}
bool Constant::is_one() const {
  if (const Small* s = small()) return s->num == 1 && s->den == 1;
  return is_exact() ? false : inexact() == 1.0;
}
bool Constant::is_minus_one() const {
  if (const Small* s = small()) return s->num == -1 && s->den == 1;
  return is_exact() ? false : inexact() == -1.0;
}
bool Constant::is_negative() const {
  if (const Small* s = small()) return s->num < 0;
  return is_exact() ? sgn(std::get<mpq_class>(value_)) < 0 : inexact() < 0.0;
}

bool Constant::is_exact_integer() const {
  if (const Small* s = small()) return s->den == 1;
  return is_exact() && std::get<mpq_class>(value_).get_den() == 1;
}

bool Constant::is_integer() const {
  if (is_exact()) return is_exact_integer();
  const double d = inexact();
  return std::isfinite(d) && std::floor(d) == d;
}

std::optional<long> Constant::to_long() const {
  if (const Small* s = small()) {
    if (s->den != 1) return std::nullopt;
    return s->num;
  }
  if (is_exact()) return std::nullopt;  // a large exact value never fits
  const double d = inexact();
  if (!is_integer() || std::fabs(d) > 9.0e15) return std::nullopt;
  return static_cast<long>(d);
}

double Constant::to_double() const {
  if (const Small* s = small()) {
    if (s->den == 1) return static_cast<double>(s->num);
    return exact().get_d();
  }
  return is_exact() ? std::get<mpq_class>(value_).get_d() : inexact();
}

SymType Constant::symtype() const {
  if (!is_exact()) return SymType::Kind::Real;
  return is_exact_integer() ? SymType::Kind::Integer : SymType::Kind::Rational;
}

Constant Constant::operator-() const {
  if (const Small* s = small()) {
    if (auto c = from_wide(-Wide(s->num), s->den)) return *c;
  }
  return is_exact() ? Constant(mpq_class(-exact())) : Constant(-inexact());
}

Constant operator+(const Constant& a, const Constant& b) {
  const auto* x = a.small();
  const auto* y = b.small();
  if (x && y) {
    if (x->den == 1 && y->den == 1) {
      const Wide n = Wide(x->num) + y->num;
      if (fits64(n)) return Constant(static_cast<long>(n));
    } else if (auto c = Constant::from_wide(Wide(x->num) * y->den + Wide(y->num) * x->den, Wide(x->den) * y->den)) {
      return *c;
    }
  }
  if (a.is_exact() && b.is_exact()) return Constant(mpq_class(a.exact() + b.exact()));
  return Constant(a.to_double() + b.to_double());
}

Constant operator-(const Constant& a, const Constant& b) {
  if (a.is_exact() && b.is_exact()) return a + (-b);
  return Constant(a.to_double() - b.to_double());
}

Constant operator*(const Constant& a, const Constant& b) {
  const auto* x = a.small();
  const auto* y = b.small();
  if (x && y) {
    if (x->den == 1 && y->den == 1) {
      const Wide n = Wide(x->num) * y->num;
      if (fits64(n)) return Constant(static_cast<long>(n));
    } else if (auto c = Constant::from_wide(Wide(x->num) * y->num, Wide(x->den) * y->den)) {
      return *c;
    }
  }
  if (a.is_exact() && b.is_exact()) return Constant(mpq_class(a.exact() * b.exact()));
  return Constant(a.to_double() * b.to_double());
}

Constant operator/(const Constant& a, const Constant& b) {
  if (a.is_exact() && b.is_exact()) {
    if (b.is_zero()) throw DomainError("exact division by zero");
    const auto* x = a.small();
    const auto* y = b.small();
    if (x && y) {
      if (auto c = Constant::from_wide(Wide(x->num) * y->den, Wide(x->den) * y->num)) return *c;
    }
    return Constant(mpq_class(a.exact() / b.exact()));
  }
  return Constant(a.to_double() / b.to_double());
}

Constant Constant::abs() const { return is_negative() ? -*this : *this; }

std::optional<Constant> Constant::pow(const Constant& base, const Constant& exponent) {
  if (base.is_exact() && exponent.is_exact()) {
    const mpq_class& b = base.exact();
    const mpq_class& e = exponent.exact();
    if (sgn(b) == 0) {
      if (sgn(e) == 0) throw DomainError("0^0 is undefined");
      if (sgn(e) < 0) throw DomainError("0 raised to a negative power");
      return Constant(0);
    }
    if (b == 1) return Constant(1);
    if (e.get_den() != 1) return std::nullopt;
    if (!e.get_num().fits_slong_p()) return std::nullopt;
    const long n = e.get_num().get_si();
    if (n > kMaxFoldedExponent || n < -kMaxFoldedExponent) return std::nullopt;
    const unsigned long mag = static_cast<unsigned long>(n < 0 ? -n : n);
    mpz_class num, den;
    mpz_pow_ui(num.get_mpz_t(), b.get_num_mpz_t(), mag);
    mpz_pow_ui(den.get_mpz_t(), b.get_den_mpz_t(), mag);
    return n < 0 ? Constant(mpq_class(den, num)) : Constant(mpq_class(num, den));
  }
  return Constant(std::pow(base.to_double(), exponent.to_double()));
}

std::strong_ordering compare(const Constant& a, const Constant& b) {
  auto tag_order = [&]() { return a.is_exact() == b.is_exact() ? std::strong_ordering::equal
                                  : a.is_exact()               ? std::strong_ordering::less
                                                               : std::strong_ordering::greater; };
  if (a.small() && b.small()) {
    const Wide l = Wide(a.small()->num) * b.small()->den;
    const Wide r = Wide(b.small()->num) * a.small()->den;
    return l < r ? std::strong_ordering::less : l > r ? std::strong_ordering::greater : std::strong_ordering::equal;
  }
  if (a.is_exact() && b.is_exact()) {
    const int c = cmp(a.exact(), b.exact());
    return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
  }
  const double da = a.is_exact() ? 0.0 : normalized(a.inexact());
  const double db = b.is_exact() ? 0.0 : normalized(b.inexact());
  const bool nan_a = !a.is_exact() && std::isnan(da);
  const bool nan_b = !b.is_exact() && std::isnan(db);
  if (nan_a || nan_b) {
    if (nan_a && nan_b) return std::strong_ordering::equal;
    return nan_a ? std::strong_ordering::greater : std::strong_ordering::less;
  }
  if (a.is_exact() || b.is_exact()) {
    // Exactly one side is inexact here.
    const double d = a.is_exact() ? db : da;
    int c = 0;
    if (std::isinf(d)) {
      c = d > 0 ? -1 : 1;  // exact side relative to the infinity
    } else {
      c = cmp(a.is_exact() ? a.exact() : b.exact(), mpq_class(d));
    }
    if (!a.is_exact()) c = -c;
    if (c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    return tag_order();
  }
  if (da < db) return std::strong_ordering::less;
  if (da > db) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

bool operator==(const Constant& a, const Constant& b) {
  if (a.is_exact() != b.is_exact()) return false;
  if (a.small() || b.small()) {
    return a.small() && b.small() && a.small()->num == b.small()->num && a.small()->den == b.small()->den;
  }
  if (a.is_exact()) return std::get<mpq_class>(a.value_) == std::get<mpq_class>(b.value_);
  return std::bit_cast<std::uint64_t>(normalized(a.inexact())) == std::bit_cast<std::uint64_t>(normalized(b.inexact()));
}

std::size_t Constant::hash() const {
  if (const Small* s = small()) {
    return hash_combine(mix64(static_cast<std::uint64_t>(s->num)), static_cast<std::uint64_t>(s->den));
  }
  if (is_exact()) {
    const mpq_class& q = std::get<mpq_class>(value_);
    return hash_combine(hash_mpz(q.get_num()), hash_mpz(q.get_den()));
  }
  return hash_combine(0x51ed270b27a1ULL, std::bit_cast<std::uint64_t>(normalized(inexact())));
}

std::string Constant::str() const {
  if (const Small* s = small()) {
    return s->den == 1 ? std::to_string(s->num) : std::to_string(s->num) + "/" + std::to_string(s->den);
  }
  if (is_exact()) return std::get<mpq_class>(value_).get_str(10);
  const double d = inexact();
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  std::string s(buf, ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

}  // namespace symx
