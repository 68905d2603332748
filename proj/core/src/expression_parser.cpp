#include "dferr/test_function.hpp"

#include <cctype>
#include <charconv>
#include <string>

namespace dferr {

namespace {

// expr    := term (('+' | '-') term)*
// term    := unary ('*' unary)*
// unary   := '-' unary | primary
// primary := number | 'x' digits | func '(' expr ')' | '(' expr ')'
class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  TestFunction parse() {
    TestFunction f = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  TestFunction expr() {
    TestFunction f = term();
    while (true) {
      if (accept('+')) {
        f = f + term();
      } else if (accept('-')) {
        f = f - term();
      } else {
        return f;
      }
    }
  }

  TestFunction term() {
    TestFunction f = unary();
    while (accept('*')) f = f * unary();
    return f;
  }

  TestFunction unary() {
    if (accept('-')) return -unary();
    return primary();
  }

  TestFunction primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      TestFunction f = expr();
      expect(')');
      return f;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  TestFunction number() {
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return TestFunction::constant(value, dim_);
  }

  TestFunction identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name.size() > 1 && name[0] == 'x' && is_digits(name.substr(1))) {
      int index = 0;
      std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (index >= dim_) {
        pos_ = start;
        fail("variable " + std::string(name) + " out of range for dimension " +
             std::to_string(dim_));
      }
      return TestFunction::coordinate(index, dim_);
    }
    TestFunction (*fn)(const TestFunction&) = nullptr;
    if (name == "sin") {
      fn = [](const TestFunction& a) { return sin(a); };
    } else if (name == "cos") {
      fn = [](const TestFunction& a) { return cos(a); };
    } else if (name == "exp") {
      fn = [](const TestFunction& a) { return exp(a); };
    } else if (name == "sq") {
      fn = [](const TestFunction& a) { return sq(a); };
    } else {
      pos_ = start;
      fail("unknown identifier '" + std::string(name) + "'");
    }
    expect('(');
    TestFunction arg = expr();
    expect(')');
    return fn(arg);
  }

  static bool is_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace

TestFunction TestFunction::parse(std::string_view text, int dim) {
  if (dim < 1 || dim > kMaxJetDimension) {
    throw std::invalid_argument("expression dimension out of range: " + std::to_string(dim));
  }
  return Parser(text, dim).parse().named(std::string(text));
}

}  // namespace dferr
