#include "fairmon/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "fairmon/errors.hpp"

namespace fairmon {
namespace {

class Parser {
 public:
  Parser(std::string_view text, const StateSpace& states) : text_(text), states_(states) {}

  Pse parse() {
    Pse e = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }
  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw ParseError(what, at);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  Pse expr() {
    Pse lhs = term();
    for (char c = peek(); c == '+' || c == '-'; c = peek()) {
      ++pos_;
      Pse rhs = term();
      lhs = c == '+' ? Pse::add(std::move(lhs), std::move(rhs)) : Pse::sub(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Pse term() {
    Pse lhs = factor();
    for (char c = peek(); c == '*' || c == '/'; c = peek()) {
      ++pos_;
      const std::size_t at = (skip_space(), pos_);
      Pse rhs = factor();
      if (c == '*') {
        lhs = Pse::mul(std::move(lhs), std::move(rhs));
      } else if (rhs.kind() == Pse::Kind::constant) {
        if (!(rhs.value() > 0.0)) fail("division by a non-positive constant", at);
        lhs = Pse::mul(Pse::constant(1.0 / rhs.value()), std::move(lhs));
      } else if (!is_monomial(rhs)) {
        fail("denominator must be a product of variables", at);
      } else if (lhs.kind() == Pse::Kind::constant && lhs.value() == 1.0) {
        lhs = Pse::inv(std::move(rhs));
      } else {
        lhs = Pse::mul(std::move(lhs), Pse::inv(std::move(rhs)));
      }
    }
    return lhs;
  }

  Pse factor() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      Pse e = expr();
      expect(')');
      return e;
    }
    if (c == 'p' && pos_ + 1 < text_.size()) {
      const std::size_t save = pos_;
      ++pos_;
      if (peek() == '(') {
        ++pos_;
        StateId from = state();
        expect(',');
        StateId to = state();
        expect(')');
        return Pse::variable(from, to);
      }
      pos_ = save;
    }
    if (c == '-') {
      ++pos_;
      skip_space();
      return Pse::constant(-number());
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Pse::constant(number());
    if (c == '\0') fail("unexpected end of input");
    fail("unexpected '" + std::string(1, c) + "'");
  }

  double number() {
    const std::size_t at = pos_;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc{}) fail("expected a number", at);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    if (!std::isfinite(v)) fail("number out of range", at);
    return v;
  }

  StateId state() {
    skip_space();
    const std::size_t at = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    std::string_view token = text_.substr(at, pos_ - at);
    if (token.empty()) fail("expected a state", at);
    if (auto s = states_.find(token)) return *s;
    throw UnknownStateError("unknown state '" + std::string(token) + "' at position " +
                            std::to_string(at));
  }

  std::string_view text_;
  const StateSpace& states_;
  std::size_t pos_ = 0;
};

}  // namespace

Pse parse_pse(std::string_view text, const StateSpace& states) {
  return Parser(text, states).parse();
}

}  // namespace fairmon
