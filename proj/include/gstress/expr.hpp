#pragma once

// Expression language for immersion components.
//
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := "-" factor | base ("^" integer)?
//   base   := number | ident | ident "(" expr ")" | "(" expr ")"
//
// so "^" binds tighter than unary minus: -u1^2 is -(u1^2).
// Identifiers are the variables u1..u4, the functions sin cos tan exp log sqrt
// sinh cosh, the constant pi, and parameter names.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gstress/errors.hpp"
#include "gstress/jet.hpp"

namespace gstress {

using Params = std::map<std::string, double>;

enum class ExprKind { constant, parameter, variable, negate, function, binary, power };
enum class BinaryOp { add, sub, mul, div };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind = ExprKind::constant;
  double value = 0.0;          // constant
  std::string name;            // parameter
  int index = 0;               // variable (0-based: u1 -> 0)
  ElementaryFn fn = ElementaryFn::sin;
  BinaryOp op = BinaryOp::add;
  int exponent = 0;            // power
  std::vector<ExprPtr> children;

  static ExprPtr constant(double v) {
    auto e = std::make_shared<Expr>();
    e->value = v;
    return e;
  }
  static ExprPtr parameter(std::string n) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::parameter;
    e->name = std::move(n);
    return e;
  }
  static ExprPtr variable(int i) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::variable;
    e->index = i;
    return e;
  }
  static ExprPtr negate(ExprPtr c) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::negate;
    e->children = {std::move(c)};
    return e;
  }
  static ExprPtr function(ElementaryFn f, ExprPtr c) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::function;
    e->fn = f;
    e->children = {std::move(c)};
    return e;
  }
  static ExprPtr binary(BinaryOp o, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::binary;
    e->op = o;
    e->children = {std::move(l), std::move(r)};
    return e;
  }
  static ExprPtr power(ExprPtr b, int n) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::power;
    e->exponent = n;
    e->children = {std::move(b)};
    return e;
  }
};

inline bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::constant: return a.value == b.value;
    case ExprKind::parameter: return a.name == b.name;
    case ExprKind::variable: return a.index == b.index;
    case ExprKind::negate: break;
    case ExprKind::function:
      if (a.fn != b.fn) return false;
      break;
    case ExprKind::binary:
      if (a.op != b.op) return false;
      break;
    case ExprKind::power:
      if (a.exponent != b.exponent) return false;
      break;
  }
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!structurally_equal(*a.children[i], *b.children[i])) return false;
  return true;
}

inline const char* function_name(ElementaryFn f) {
  switch (f) {
    case ElementaryFn::sin: return "sin";
    case ElementaryFn::cos: return "cos";
    case ElementaryFn::tan: return "tan";
    case ElementaryFn::exp: return "exp";
    case ElementaryFn::log: return "log";
    case ElementaryFn::sqrt: return "sqrt";
    case ElementaryFn::sinh: return "sinh";
    case ElementaryFn::cosh: return "cosh";
  }
  return "?";
}

inline std::optional<ElementaryFn> function_from_name(std::string_view s) {
  static constexpr ElementaryFn all[] = {ElementaryFn::sin,  ElementaryFn::cos,  ElementaryFn::tan,
                                         ElementaryFn::exp,  ElementaryFn::log,  ElementaryFn::sqrt,
                                         ElementaryFn::sinh, ElementaryFn::cosh};
  for (auto f : all)
    if (s == function_name(f)) return f;
  return std::nullopt;
}

/// Shortest decimal that reads back to exactly `v`.
inline std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("cannot format real");
  return std::string(buf, end);
}

/// Fully parenthesized text that parses back to the same tree.
inline std::string print_expression(const Expr& e) {
  switch (e.kind) {
    case ExprKind::constant:
      if (!std::isfinite(e.value)) throw Error("cannot print a non-finite constant");
      if (std::signbit(e.value)) return "(-" + format_real(-e.value) + ")";
      return format_real(e.value);
    case ExprKind::parameter: return e.name;
    case ExprKind::variable: return "u" + std::to_string(e.index + 1);
    case ExprKind::negate: return "(-" + print_expression(*e.children[0]) + ")";
    case ExprKind::function:
      return std::string(function_name(e.fn)) + "(" + print_expression(*e.children[0]) + ")";
    case ExprKind::binary: {
      static constexpr const char* sym[] = {" + ", " - ", " * ", " / "};
      return "(" + print_expression(*e.children[0]) + sym[static_cast<int>(e.op)] +
             print_expression(*e.children[1]) + ")";
    }
    case ExprKind::power:
      return "(" + print_expression(*e.children[0]) + "^" + std::to_string(e.exponent) + ")";
  }
  return {};
}

namespace detail {

class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, const std::set<std::string>* known_params, int line,
                   int column_offset)
      : text_(text), known_(known_params), line_(line), col0_(column_offset) {}

  ExprPtr parse() {
    auto e = parse_expr();
    skip_space();
    if (pos_ < text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  std::string_view text_;
  const std::set<std::string>* known_;
  int line_;
  int col0_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw ParseError(msg, line_, col0_ + static_cast<int>(at) + 1);
  }
  [[noreturn]] void fail(const std::string& msg) const { fail(msg, pos_); }

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r'))
      ++pos_;
  }
  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  ExprPtr parse_expr() {
    auto lhs = parse_term();
    for (;;) {
      if (accept('+'))
        lhs = Expr::binary(BinaryOp::add, lhs, parse_term());
      else if (accept('-'))
        lhs = Expr::binary(BinaryOp::sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  ExprPtr parse_term() {
    auto lhs = parse_factor();
    for (;;) {
      if (accept('*'))
        lhs = Expr::binary(BinaryOp::mul, lhs, parse_factor());
      else if (accept('/'))
        lhs = Expr::binary(BinaryOp::div, lhs, parse_factor());
      else
        return lhs;
    }
  }

  ExprPtr parse_factor() {
    if (accept('-')) return Expr::negate(parse_factor());
    auto base = parse_base();
    if (accept('^')) return Expr::power(base, parse_integer());
    return base;
  }

  int parse_integer() {
    skip_space();
    const std::size_t start = pos_;
    bool negative = false;
    if (pos_ < text_.size() && text_[pos_] == '-') {
      negative = true;
      ++pos_;
    }
    const std::size_t digits = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == digits) fail("expected an integer exponent", start);
    if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
      fail("exponent must be an integer", start);
    int v = 0;
    auto [p, ec] = std::from_chars(text_.data() + digits, text_.data() + pos_, v);
    if (ec != std::errc()) fail("integer exponent out of range", start);
    return negative ? -v : v;
  }

  ExprPtr parse_base() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  ExprPtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || p != text_.data() + pos_) fail("malformed number", start);
    return Expr::constant(v);
  }

  ExprPtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string id(text_.substr(start, pos_ - start));
    const bool call = peek() == '(';

    if (auto fn = function_from_name(id)) {
      if (!call) fail("function '" + id + "' requires parentheses", start);
      accept('(');
      if (peek() == ')') fail("function '" + id + "' takes exactly one argument", start);
      auto arg = parse_expr();
      if (peek() == ',') fail("function '" + id + "' takes exactly one argument", start);
      if (!accept(')')) fail("expected ')'");
      return Expr::function(*fn, arg);
    }
    if (call) fail("'" + id + "' is not a function", start);
    if (id.size() == 2 && id[0] == 'u' && id[1] >= '1' && id[1] <= '4')
      return Expr::variable(id[1] - '1');
    if (id.size() > 1 && id[0] == 'u' &&
        std::all_of(id.begin() + 1, id.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      fail("variables are u1..u4, got '" + id + "'", start);
    if (id == "pi") return Expr::parameter(id);
    if (known_ && !known_->contains(id)) fail("unknown identifier '" + id + "'", start);
    return Expr::parameter(id);
  }
};

}  // namespace detail

/// Parse one expression. When `known_params` is given, any identifier that is
/// not a variable, function, pi or one of those names is rejected.
inline ExprPtr parse_expression(std::string_view text,
                                const std::set<std::string>* known_params = nullptr,
                                int line = 1, int column_offset = 0) {
  return detail::ExpressionParser(text, known_params, line, column_offset).parse();
}

/// Highest variable index used plus one.
inline int max_variable(const Expr& e) {
  int m = e.kind == ExprKind::variable ? e.index + 1 : 0;
  for (const auto& c : e.children) m = std::max(m, max_variable(*c));
  return m;
}

inline void collect_parameters(const Expr& e, std::set<std::string>& out) {
  if (e.kind == ExprKind::parameter) out.insert(e.name);
  for (const auto& c : e.children) collect_parameters(*c, out);
}

inline double lookup_parameter(const Params& params, const std::string& name) {
  if (auto it = params.find(name); it != params.end()) return it->second;
  if (name == "pi") return std::numbers::pi;
  throw ConfigError("unbound parameter '" + name + "'");
}

/// Real-valued evaluation; non-finite results raise SingularPointError.
inline double evaluate(const Expr& e, std::span<const double> u, const Params& params) {
  auto check = [](double v) {
    if (!std::isfinite(v)) throw SingularPointError("expression is singular at this point");
    return v;
  };
  switch (e.kind) {
    case ExprKind::constant: return e.value;
    case ExprKind::parameter: return lookup_parameter(params, e.name);
    case ExprKind::variable: return u[e.index];
    case ExprKind::negate: return -evaluate(*e.children[0], u, params);
    case ExprKind::function: {
      const double x = evaluate(*e.children[0], u, params);
      switch (e.fn) {
        case ElementaryFn::sin: return std::sin(x);
        case ElementaryFn::cos: return std::cos(x);
        case ElementaryFn::tan: return check(std::tan(x));
        case ElementaryFn::exp: return check(std::exp(x));
        case ElementaryFn::log:
          if (!(x > 0.0)) throw SingularPointError("log of a non-positive value");
          return std::log(x);
        case ElementaryFn::sqrt:
          if (x < 0.0) throw SingularPointError("sqrt of a negative value");
          return std::sqrt(x);
        case ElementaryFn::sinh: return check(std::sinh(x));
        case ElementaryFn::cosh: return check(std::cosh(x));
      }
      break;
    }
    case ExprKind::binary: {
      const double a = evaluate(*e.children[0], u, params);
      const double b = evaluate(*e.children[1], u, params);
      switch (e.op) {
        case BinaryOp::add: return a + b;
        case BinaryOp::sub: return a - b;
        case BinaryOp::mul: return a * b;
        case BinaryOp::div:
          if (b == 0.0) throw SingularPointError("division by zero");
          return a / b;
      }
      break;
    }
    case ExprKind::power: {
      const double b = evaluate(*e.children[0], u, params);
      if (e.exponent < 0 && b == 0.0) throw SingularPointError("negative power of zero");
      double r = 1.0;
      for (int k = 0; k < std::abs(e.exponent); ++k) r *= b;
      return e.exponent < 0 ? 1.0 / r : r;
    }
  }
  throw Error("corrupt expression tree");
}

/// Jet-valued evaluation; `u` holds the coordinate jets.
inline Jet evaluate(const Expr& e, std::span<const Jet> u, const Params& params) {
  switch (e.kind) {
    case ExprKind::constant: return Jet::constant_like(u[0], e.value);
    case ExprKind::parameter: return Jet::constant_like(u[0], lookup_parameter(params, e.name));
    case ExprKind::variable: return u[e.index];
    case ExprKind::negate: return -evaluate(*e.children[0], u, params);
    case ExprKind::function: return jet_elementary(e.fn, evaluate(*e.children[0], u, params));
    case ExprKind::binary: {
      static constexpr ArithOp ops[] = {ArithOp::add, ArithOp::sub, ArithOp::mul, ArithOp::div};
      return jet_arith(ops[static_cast<int>(e.op)], evaluate(*e.children[0], u, params),
                       evaluate(*e.children[1], u, params));
    }
    case ExprKind::power: return pow(evaluate(*e.children[0], u, params), e.exponent);
  }
  throw Error("corrupt expression tree");
}

}  // namespace gstress
