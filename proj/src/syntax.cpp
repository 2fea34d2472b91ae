#include "symx/syntax.hpp"

#include "symx/error.hpp"

#include <cctype>
#include <utility>

namespace symx {

namespace {

struct Token {
  enum class Kind { Number, Ident, Slot, LParen, RParen, Comma, Op, End };
  Kind kind = Kind::End;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  Lexer(std::string_view text, bool allow_slots) : text_(text), allow_slots_(allow_slots) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= text_.size()) {
        t.kind = Token::Kind::End;
        out.push_back(t);
        return out;
      }
      const char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && pos_ + 1 < text_.size() &&
                                                          std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
        t.kind = Token::Kind::Number;
        t.text = number();
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Token::Kind::Ident;
        t.text = identifier();
      } else if (c == '~') {
        if (!allow_slots_) throw ParseError("slots are only allowed in rules", line_, column_);
        advance();
        if (pos_ >= text_.size() || !std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
          throw ParseError("expected slot name after '~'", line_, column_);
        }
        t.kind = Token::Kind::Slot;
        t.text = identifier();
      } else if (c == '(' || c == ')' || c == ',') {
        t.kind = c == '(' ? Token::Kind::LParen : c == ')' ? Token::Kind::RParen : Token::Kind::Comma;
        t.text = std::string(1, c);
        advance();
      } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
        t.kind = Token::Kind::Op;
        t.text = std::string(1, c);
        advance();
      } else {
        throw ParseError(std::string("unexpected character '") + c + "'", line_, column_);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
  }

  bool digit_at(std::size_t i) const {
    return i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i]));
  }

  std::string number() {
    const std::size_t start = pos_;
    while (digit_at(pos_)) advance();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      advance();
      while (digit_at(pos_)) advance();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (digit_at(look)) {
        while (pos_ < look) advance();
        while (digit_at(pos_)) advance();
      }
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      advance();
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string_view text_;
  bool allow_slots_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  SyntaxNode parse() {
    SyntaxNode root = sum();
    if (peek().kind != Token::Kind::End) fail("unexpected '" + peek().text + "'");
    return root;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  Token take() { return tokens_[pos_++]; }

  [[noreturn]] void fail(const std::string& message) const {
    const Token& t = peek();
    throw ParseError(t.kind == Token::Kind::End ? "unexpected end of input" : message, t.line, t.column);
  }

  bool at_op(char op) const { return peek().kind == Token::Kind::Op && peek().text[0] == op; }

  static SyntaxNode binary(const Token& op, SyntaxNode lhs, SyntaxNode rhs) {
    SyntaxNode n;
    n.kind = SyntaxNode::Kind::Binary;
    n.text = op.text;
    n.line = op.line;
    n.column = op.column;
    n.children.push_back(std::move(lhs));
    n.children.push_back(std::move(rhs));
    return n;
  }

  SyntaxNode sum() {
    SyntaxNode lhs = product();
    while (at_op('+') || at_op('-')) {
      Token op = take();
      lhs = binary(op, std::move(lhs), product());
    }
    return lhs;
  }

  SyntaxNode product() {
    SyntaxNode lhs = unary();
    while (at_op('*') || at_op('/')) {
      Token op = take();
      lhs = binary(op, std::move(lhs), unary());
    }
    return lhs;
  }

  SyntaxNode unary() {
    if (at_op('-')) {
      Token op = take();
      SyntaxNode n;
      n.kind = SyntaxNode::Kind::Negate;
      n.text = "-";
      n.line = op.line;
      n.column = op.column;
      n.children.push_back(unary());
      return n;
    }
    if (at_op('+')) {
      take();
      return unary();
    }
    return power();
  }

  SyntaxNode power() {
    SyntaxNode base = primary();
    if (at_op('^')) {
      Token op = take();
      // The exponent may carry its own unary minus: x^-1.
      SyntaxNode exponent = at_op('-') ? unary() : power();
      return binary(op, std::move(base), std::move(exponent));
    }
    return base;
  }

  SyntaxNode primary() {
    const Token& t = peek();
    SyntaxNode n;
    n.line = t.line;
    n.column = t.column;
    switch (t.kind) {
      case Token::Kind::Number:
        n.kind = SyntaxNode::Kind::Number;
        n.text = take().text;
        return n;
      case Token::Kind::Slot:
        n.kind = SyntaxNode::Kind::Slot;
        n.text = take().text;
        return n;
      case Token::Kind::Ident: {
        n.text = take().text;
        if (peek().kind != Token::Kind::LParen) {
          n.kind = SyntaxNode::Kind::Ident;
          return n;
        }
        take();
        n.kind = SyntaxNode::Kind::Call;
        if (peek().kind != Token::Kind::RParen) {
          n.children.push_back(sum());
          while (peek().kind == Token::Kind::Comma) {
            take();
            n.children.push_back(sum());
          }
        }
        if (peek().kind != Token::Kind::RParen) fail("expected ')'");
        take();
        return n;
      }
      case Token::Kind::LParen: {
        take();
        SyntaxNode inner = sum();
        if (peek().kind != Token::Kind::RParen) fail("expected ')'");
        take();
        return inner;
      }
      default: fail("unexpected '" + t.text + "'");
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

SyntaxNode parse_syntax(std::string_view text, bool allow_slots) {
  return Parser(Lexer(text, allow_slots).run()).parse();
}

}  // namespace symx
