#pragma once

// Truncated multivariate Taylor series ("jets") with exact forward-mode
// arithmetic. A jet of order K in m variables stores c_alpha = d^alpha f(p) / alpha!
// for every multi-index |alpha| <= K, in graded lexicographic order:
//   1, u0, u1, ..., u0^2, u0 u1, ..., u1^2, ...
// so the coefficients of a lower-order truncation are a prefix.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "gstress/errors.hpp"

namespace gstress {

inline constexpr int kMaxJetVars = 4;
inline constexpr int kMaxJetOrder = 8;
inline constexpr int kDefaultJetOrder = 4;

/// Storage type of jet coefficients. Extended precision keeps the long
/// cancellation chains of fourth-order geometry accurate near chart singularities.
using JetReal = long double;

using Exponents = std::array<int, kMaxJetVars>;

/// Monomial bookkeeping shared by all jets with the same number of variables.
/// Built once per (num_vars, max_order) and never freed; every lower order is
/// served by a prefix of the same tables.
struct MonomialTable {
  struct Product {
    int out;
    int a;
    int b;
  };

  int num_vars = 0;
  int max_order = 0;
  std::vector<Exponents> exponents;
  std::vector<int> degree;
  std::vector<double> factorial;              // alpha!
  std::vector<std::size_t> count_upto;        // #monomials with degree <= k
  std::vector<Product> products;              // all (a, b) with a + b = out, sorted by out
  std::vector<std::size_t> products_upto;     // #products whose out has degree <= k
  std::vector<std::size_t> products_begin;    // first product of each out index (size N + 1)
  std::vector<std::array<int, kMaxJetVars>> raise;  // index of alpha + e_i, or -1

  int index_of(const Exponents& e) const {
    int d = 0;
    for (int i = 0; i < num_vars; ++i) d += e[i];
    if (d > max_order) return -1;
    return lookup_[pack(e)];
  }

  static MonomialTable build(int num_vars, int max_order) {
    MonomialTable t;
    t.num_vars = num_vars;
    t.max_order = max_order;
    t.count_upto.assign(max_order + 1, 0);
    for (int d = 0; d <= max_order; ++d) {
      Exponents e{};
      t.enumerate_degree(e, 0, d);
      t.count_upto[d] = t.exponents.size();
    }
    const int n = static_cast<int>(t.exponents.size());
    std::size_t packed = 1;
    for (int i = 0; i < num_vars; ++i) packed *= static_cast<std::size_t>(max_order + 1);
    t.lookup_.assign(packed, -1);
    for (int k = 0; k < n; ++k) {
      t.lookup_[t.pack(t.exponents[k])] = k;
      double f = 1.0;
      for (int i = 0; i < num_vars; ++i)
        for (int j = 2; j <= t.exponents[k][i]; ++j) f *= j;
      t.factorial.push_back(f);
      int d = 0;
      for (int i = 0; i < num_vars; ++i) d += t.exponents[k][i];
      t.degree.push_back(d);
    }
    t.raise.resize(n);
    for (int k = 0; k < n; ++k) {
      t.raise[k].fill(-1);
      for (int i = 0; i < num_vars; ++i) {
        Exponents e = t.exponents[k];
        ++e[i];
        t.raise[k][i] = t.index_of(e);
      }
    }
    // Products grouped by output index, outputs in graded order.
    t.products_begin.assign(n + 1, 0);
    for (int out = 0; out < n; ++out) {
      t.products_begin[out] = t.products.size();
      for (int a = 0; a < n; ++a) {
        Exponents rest{};
        bool ok = true;
        for (int i = 0; i < num_vars; ++i) {
          rest[i] = t.exponents[out][i] - t.exponents[a][i];
          if (rest[i] < 0) ok = false;
        }
        if (ok) t.products.push_back({out, a, t.index_of(rest)});
      }
    }
    t.products_begin[n] = t.products.size();
    t.products_upto.resize(max_order + 1);
    for (int d = 0; d <= max_order; ++d)
      t.products_upto[d] = t.products_begin[t.count_upto[d]];
    return t;
  }

 private:
  std::vector<int> lookup_;

  std::size_t pack(const Exponents& e) const {
    std::size_t key = 0;
    for (int i = 0; i < num_vars; ++i) key = key * static_cast<std::size_t>(max_order + 1) + e[i];
    return key;
  }

  // Within one degree: lexicographic with the first variable's exponent descending.
  void enumerate_degree(Exponents& e, int var, int remaining) {
    if (var == num_vars - 1) {
      e[var] = remaining;
      exponents.push_back(e);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      e[var] = k;
      enumerate_degree(e, var + 1, remaining - k);
    }
    e[var] = 0;
  }
};

/// Number of monomials of total degree <= order in num_vars variables.
inline std::size_t jet_size(int num_vars, int order) {
  std::size_t r = 1;
  for (int i = 1; i <= num_vars; ++i) r = r * static_cast<std::size_t>(order + i) / i;
  return r;
}

/// Shared table covering at least `order` for `num_vars` variables.
inline const MonomialTable* monomial_table(int num_vars, int order) {
  if (num_vars < 1 || num_vars > kMaxJetVars)
    throw JetError("jet num_vars must be in 1.." + std::to_string(kMaxJetVars));
  if (order < 0 || order > kMaxJetOrder)
    throw JetError("jet order must be in 0.." + std::to_string(kMaxJetOrder));
  static std::mutex mutex;
  static std::array<std::vector<std::unique_ptr<MonomialTable>>, kMaxJetVars + 1> tables;
  std::lock_guard lock(mutex);
  auto& list = tables[num_vars];
  if (list.empty() || list.back()->max_order < order) {
    const int build_order = std::max(order, list.empty() ? kDefaultJetOrder : list.back()->max_order);
    list.push_back(std::make_unique<MonomialTable>(MonomialTable::build(num_vars, build_order)));
  }
  return list.back().get();
}

class Jet {
 public:
  Jet() = default;

  /// Zero jet.
  Jet(int num_vars, int order)
      : table_(monomial_table(num_vars, order)),
        order_(order),
        coeffs_(jet_size(num_vars, order), 0.0) {}

  Jet(int num_vars, int order, std::vector<JetReal> coeffs)
      : table_(monomial_table(num_vars, order)), order_(order), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != jet_size(num_vars, order))
      throw JetError("coefficient count does not match (num_vars, order)");
  }

  static Jet constant(int num_vars, int order, double value) {
    Jet j(num_vars, order);
    j.coeffs_[0] = value;
    return j;
  }

  /// Constant with the same shape as `like`.
  static Jet constant_like(const Jet& like, double value) {
    Jet j;
    j.table_ = like.table_;
    j.order_ = like.order_;
    j.coeffs_.assign(like.coeffs_.size(), 0.0);
    j.coeffs_[0] = value;
    return j;
  }

  /// Jet of the coordinate function u_index expanded at u_index = value.
  static Jet variable(int index, double value, int num_vars, int order = kDefaultJetOrder) {
    if (index < 0 || index >= num_vars)
      throw JetError("variable index " + std::to_string(index) + " out of range for " +
                     std::to_string(num_vars) + " variables");
    Jet j(num_vars, order);
    j.coeffs_[0] = value;
    if (order >= 1) j.coeffs_[1 + index] = 1.0;
    return j;
  }

  int num_vars() const { return table_ ? table_->num_vars : 0; }
  int order() const { return order_; }
  double value() const { return static_cast<double>(coeffs_[0]); }
  /// Constant term at full internal precision.
  JetReal constant_term() const { return coeffs_[0]; }
  std::span<const JetReal> coeffs() const { return coeffs_; }
  std::span<JetReal> coeffs() { return coeffs_; }
  const MonomialTable& table() const { return *table_; }

  /// Taylor coefficient c_alpha (not the derivative).
  double coeff(std::span<const int> alpha) const { return static_cast<double>(coeffs_[checked_index(alpha)]); }
  double coeff(std::initializer_list<int> alpha) const {
    return coeff(std::span<const int>(alpha.begin(), alpha.size()));
  }

  /// d^alpha f(p) = alpha! * c_alpha.
  double partial(std::span<const int> alpha) const {
    const int k = checked_index(alpha);
    return static_cast<double>(table_->factorial[k] * coeffs_[k]);
  }
  double partial(std::initializer_list<int> alpha) const {
    return partial(std::span<const int>(alpha.begin(), alpha.size()));
  }

  /// d/du_var, one order lower.
  Jet derivative(int var) const {
    if (var < 0 || var >= num_vars()) throw JetError("derivative variable out of range");
    if (order_ == 0) throw JetError("jet order exhausted: no derivative data left");
    Jet r = shaped(order_ - 1);
    const auto& t = *table_;
    for (std::size_t k = 0; k < r.coeffs_.size(); ++k) {
      const int up = t.raise[k][var];
      r.coeffs_[k] = (t.exponents[k][var] + 1) * coeffs_[up];
    }
    return r;
  }

  Jet truncated(int order) const {
    if (order > order_ || order < 0) throw JetError("cannot truncate a jet upward");
    Jet r = shaped(order);
    std::copy_n(coeffs_.begin(), r.coeffs_.size(), r.coeffs_.begin());
    return r;
  }

  Jet& operator+=(const Jet& b) {
    check_compatible(b);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += b.coeffs_[k];
    return *this;
  }
  Jet& operator-=(const Jet& b) {
    check_compatible(b);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= b.coeffs_[k];
    return *this;
  }
  Jet& operator*=(double s) {
    for (JetReal& c : coeffs_) c *= s;
    return *this;
  }
  Jet& operator+=(double s) {
    coeffs_[0] += s;
    return *this;
  }

  /// this += a * b, without a temporary.
  Jet& add_product(const Jet& a, const Jet& b) {
    check_compatible(a);
    check_compatible(b);
    const auto& t = *table_;
    const auto end = t.products_upto[order_];
    const JetReal* pa = a.coeffs_.data();
    const JetReal* pb = b.coeffs_.data();
    JetReal* pr = coeffs_.data();
    for (std::size_t k = 0; k < end; ++k) {
      const auto& p = t.products[k];
      pr[p.out] += pa[p.a] * pb[p.b];
    }
    return *this;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r = a.shaped(a.order_);
    r.add_product(a, b);
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    a.check_compatible(b);
    const JetReal b0 = b.coeffs_[0];
    if (b0 == 0.0 || !std::isfinite(b0))
      throw SingularPointError("division by a jet with zero constant term");
    Jet q = a.shaped(a.order_);
    const auto& t = *a.table_;
    const std::size_t n = q.coeffs_.size();
    for (std::size_t c = 0; c < n; ++c) {
      JetReal s = a.coeffs_[c];
      for (std::size_t k = t.products_begin[c]; k < t.products_begin[c + 1]; ++k) {
        const auto& p = t.products[k];
        if (p.b != 0) s -= q.coeffs_[p.a] * b.coeffs_[p.b];
      }
      q.coeffs_[c] = s / b0;
    }
    return q;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { return a *= -1.0; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) {
    for (JetReal& c : a.coeffs_) c /= s;
    return a;
  }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a += -s; }
  friend Jet operator-(double s, Jet a) {
    a *= -1.0;
    return a += s;
  }
  friend Jet operator/(double s, const Jet& b) { return Jet::constant_like(b, s) / b; }

  /// Compose the univariate series sum_k taylor[k] * h^k with h = this - value().
  Jet compose(std::span<const JetReal> taylor) const {
    Jet h = *this;
    h.coeffs_[0] = 0.0;
    const int top = std::min<int>(order_, static_cast<int>(taylor.size()) - 1);
    Jet r = Jet::constant_like(*this, taylor[top]);
    for (int k = top - 1; k >= 0; --k) {
      r = r * h;
      r.coeffs_[0] += taylor[k];
    }
    return r;
  }

  void check_compatible(const Jet& b) const {
    if (num_vars() != b.num_vars() || order_ != b.order_)
      throw JetError("jet shape mismatch: (" + std::to_string(num_vars()) + ", " +
                     std::to_string(order_) + ") vs (" + std::to_string(b.num_vars()) + ", " +
                     std::to_string(b.order_) + ")");
  }

 private:
  const MonomialTable* table_ = nullptr;
  int order_ = 0;
  std::vector<JetReal> coeffs_;

  Jet shaped(int order) const {
    Jet r;
    r.table_ = table_;
    r.order_ = order;
    r.coeffs_.assign(jet_size(table_->num_vars, order), 0.0);
    return r;
  }

  int checked_index(std::span<const int> alpha) const {
    if (static_cast<int>(alpha.size()) > num_vars())
      throw JetError("multi-index has more entries than jet variables");
    Exponents e{};
    int d = 0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (alpha[i] < 0) throw JetError("negative multi-index entry");
      e[i] = alpha[i];
      d += alpha[i];
    }
    if (d > order_)
      throw JetError("multi-index degree " + std::to_string(d) + " exceeds jet order " +
                     std::to_string(order_));
    return table_->index_of(e);
  }
};

// Elementary functions. Each builds the univariate Taylor coefficients of the
// function about the constant term and composes.

inline Jet exp(const Jet& a) {
  std::vector<JetReal> t(a.order() + 1);
  JetReal c = std::exp(a.constant_term());
  for (int k = 0; k <= a.order(); ++k) {
    t[k] = c;
    c /= (k + 1);
  }
  return a.compose(t);
}

inline Jet log(const Jet& a) {
  const JetReal x = a.constant_term();
  if (!(x > 0.0)) throw SingularPointError("log of a jet with non-positive constant term");
  std::vector<JetReal> t(a.order() + 1);
  t[0] = std::log(x);
  JetReal p = 1.0;
  for (int k = 1; k <= a.order(); ++k) {
    p /= x;
    t[k] = ((k % 2) ? 1.0 : -1.0) * p / k;
  }
  return a.compose(t);
}

inline Jet sqrt(const Jet& a) {
  const JetReal x = a.constant_term();
  if (!(x > 0.0)) throw SingularPointError("sqrt of a jet with non-positive constant term");
  // binom(1/2, k) * x^(1/2 - k)
  std::vector<JetReal> t(a.order() + 1);
  JetReal binom = 1.0;
  JetReal p = std::sqrt(x);
  for (int k = 0; k <= a.order(); ++k) {
    t[k] = binom * p;
    binom *= (0.5 - k) / (k + 1);
    p /= x;
  }
  return a.compose(t);
}

namespace detail {
// Coefficients f^(k)(x)/k! for functions whose derivatives cycle with period 2 or 4.
inline std::vector<JetReal> cyclic_taylor(const Jet& a, std::span<const JetReal> cycle) {
  std::vector<JetReal> t(a.order() + 1);
  JetReal inv_fact = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    t[k] = cycle[k % cycle.size()] * inv_fact;
    inv_fact /= (k + 1);
  }
  return t;
}
}  // namespace detail

inline Jet sin(const Jet& a) {
  const JetReal s = std::sin(a.constant_term()), c = std::cos(a.constant_term());
  const JetReal cycle[] = {s, c, -s, -c};
  return a.compose(detail::cyclic_taylor(a, cycle));
}

inline Jet cos(const Jet& a) {
  const JetReal s = std::sin(a.constant_term()), c = std::cos(a.constant_term());
  const JetReal cycle[] = {c, -s, -c, s};
  return a.compose(detail::cyclic_taylor(a, cycle));
}

inline Jet sinh(const Jet& a) {
  const JetReal s = std::sinh(a.constant_term()), c = std::cosh(a.constant_term());
  const JetReal cycle[] = {s, c};
  return a.compose(detail::cyclic_taylor(a, cycle));
}

inline Jet cosh(const Jet& a) {
  const JetReal s = std::sinh(a.constant_term()), c = std::cosh(a.constant_term());
  const JetReal cycle[] = {c, s};
  return a.compose(detail::cyclic_taylor(a, cycle));
}

inline Jet tan(const Jet& a) {
  if (std::abs(std::cos(a.value())) < 1e-300) throw SingularPointError("tan at a pole");
  return sin(a) / cos(a);
}

inline Jet pow(const Jet& a, int exponent) {
  if (exponent < 0) {
    if (a.value() == 0.0) throw SingularPointError("negative power of a jet with zero constant term");
    return 1.0 / pow(a, -exponent);
  }
  Jet result = Jet::constant_like(a, 1.0);
  Jet base = a;
  for (int e = exponent; e > 0; e >>= 1) {
    if (e & 1) result = result * base;
    if (e > 1) base = base * base;
  }
  return result;
}

enum class ArithOp { add, sub, mul, div };
enum class ElementaryFn { sin, cos, tan, exp, log, sqrt, sinh, cosh };

inline Jet jet_arith(ArithOp op, const Jet& a, const Jet& b) {
  switch (op) {
    case ArithOp::add: return a + b;
    case ArithOp::sub: return a - b;
    case ArithOp::mul: return a * b;
    case ArithOp::div: return a / b;
  }
  throw JetError("unknown arithmetic op");
}

inline Jet jet_elementary(ElementaryFn fn, const Jet& a) {
  switch (fn) {
    case ElementaryFn::sin: return sin(a);
    case ElementaryFn::cos: return cos(a);
    case ElementaryFn::tan: return tan(a);
    case ElementaryFn::exp: return exp(a);
    case ElementaryFn::log: return log(a);
    case ElementaryFn::sqrt: return sqrt(a);
    case ElementaryFn::sinh: return sinh(a);
    case ElementaryFn::cosh: return cosh(a);
  }
  throw JetError("unknown elementary function");
}

/// Free-function spellings of the public operations.
inline Jet jet_variable(int index, double value, int num_vars, int order = kDefaultJetOrder) {
  return Jet::variable(index, value, num_vars, order);
}

inline double jet_partial(const Jet& a, std::span<const int> alpha) { return a.partial(alpha); }

}  // namespace gstress
