#include "phlift/expr/parser.h"

#include <algorithm>
#include <cctype>
#include <limits>

#include "phlift/errors.h"

namespace phlift {
namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& vars)
      : text_(text), vars_(vars) {}

  Expr run() {
    Expr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    if (pos_ >= text_.size()) throw ParseError(what + " (end of input)", pos_);
    throw ParseError(what + " '" + std::string(1, text_[pos_]) + "'", pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool at_digit() const {
    return pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]));
  }

  std::string digits() {
    const size_t start = pos_;
    while (at_digit()) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  Expr expr() {
    std::vector<Expr> terms{term()};
    while (true) {
      if (peek('+')) {
        ++pos_;
        terms.push_back(term());
      } else if (peek('-')) {
        ++pos_;
        terms.push_back(-term());
      } else {
        break;
      }
    }
    return terms.size() == 1 ? terms.front() : Expr::sum(std::move(terms));
  }

  Expr term() {
    Expr acc = factor();
    while (true) {
      if (peek('*')) {
        ++pos_;
        acc = acc * factor();
      } else if (peek('/')) {
        const size_t at = ++pos_;
        Expr d = factor();
        if (d.is_zero()) {
          pos_ = at;
          throw ParseError("division by zero constant", at);
        }
        acc = acc / d;
      } else {
        break;
      }
    }
    return acc;
  }

  Expr factor() {
    Expr b = base();
    if (peek('^')) {
      ++pos_;
      skip_ws();
      if (!at_digit()) fail("expected exponent");
      const size_t at = pos_;
      const std::string d = digits();
      if (d.size() > 9) throw ParseError("exponent too large", at);
      b = Expr::power(b, static_cast<uint32_t>(std::stoul(d)));
    }
    return b;
  }

  Expr number() {
    const size_t start = pos_;
    const std::string whole = digits();
    try {
      if (pos_ < text_.size() && text_[pos_] == '.') {
        ++pos_;
        if (!at_digit()) fail("expected digits after '.'");
        const std::string frac = digits();
        return Expr(Rational::parse(whole + "." + frac));
      }
      if (pos_ + 1 < text_.size() && text_[pos_] == '/' &&
          std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
        ++pos_;
        const std::string den = digits();
        if (Rational::parse(den).is_zero()) {
          throw ParseError("zero denominator", start);
        }
        return Expr(Rational::parse(whole + "/" + den));
      }
      return Expr(Rational::parse(whole));
    } catch (const std::overflow_error&) {
      throw ParseError("numeric literal out of range", start);
    }
  }

  Expr base() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) return number();
    if (c == '-') {
      ++pos_;
      return -base();
    }
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (!peek(')')) fail("expected ')'");
      ++pos_;
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name(text_.substr(start, pos_ - start));
      const auto prim = primitive_from_name(name);
      if (prim) {
        if (std::find(vars_.begin(), vars_.end(), name) != vars_.end()) {
          throw ParseError("primitive name used as variable", start);
        }
        if (!peek('(')) {
          throw ArityMismatch(name + " expects one argument", start);
        }
        ++pos_;
        if (peek(')')) {
          throw ArityMismatch(name + " expects one argument", pos_);
        }
        Expr arg = expr();
        if (peek(',')) {
          throw ArityMismatch(name + " expects one argument", pos_);
        }
        if (!peek(')')) fail("expected ')'");
        ++pos_;
        return Expr::call(*prim, arg);
      }
      if (std::find(vars_.begin(), vars_.end(), name) == vars_.end()) {
        throw UnknownIdentifier(name, start);
      }
      return Expr::variable(name);
    }
    fail("unexpected character");
  }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text, const std::vector<std::string>& vars) {
  return Parser(text, vars).run();
}

}  // namespace phlift
