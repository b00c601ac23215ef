#pragma once

// Finite-difference reference derivatives. Nothing here touches jets: the
// immersion is evaluated through the double-valued expression evaluator, so the
// results are an independent check of the jet machinery.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "gstress/errors.hpp"
#include "gstress/immersion.hpp"

namespace gstress {

using ScalarField = std::function<double(std::span<const double>)>;

namespace detail {

struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;  // derivative = sum w_k f(x + offset_k h) / h^order
};

inline const Stencil& central_stencil(int order) {
  static const std::array<Stencil, 5> table = {{
      {{0}, {1.0}},
      {{-1, 1}, {-0.5, 0.5}},
      {{-1, 0, 1}, {1.0, -2.0, 1.0}},
      {{-2, -1, 1, 2}, {-0.5, 1.0, -1.0, 0.5}},
      {{-2, -1, 0, 1, 2}, {1.0, -4.0, 6.0, -4.0, 1.0}},
  }};
  if (order < 0 || order > 4) throw ConfigError("finite differences are provided up to order 4");
  return table[order];
}

inline double central_difference(const ScalarField& f, std::span<const double> x,
                                 std::span<const int> alpha, double h) {
  const int m = static_cast<int>(x.size());
  std::vector<double> y(x.begin(), x.end());
  double sum = 0.0;
  // Tensor product of one-dimensional stencils, walked with an odometer.
  std::vector<std::size_t> idx(m, 0);
  while (true) {
    double w = 1.0;
    for (int i = 0; i < m; ++i) {
      const auto& s = central_stencil(alpha[i]);
      w *= s.weights[idx[i]];
      y[i] = x[i] + s.offsets[idx[i]] * h;
    }
    sum += w * f(y);
    int i = 0;
    for (; i < m; ++i) {
      if (++idx[i] < central_stencil(alpha[i]).offsets.size()) break;
      idx[i] = 0;
    }
    if (i == m) break;
  }
  int total = 0;
  for (int a : alpha) total += a;
  return sum / std::pow(h, total);
}

}  // namespace detail

/// Default step for a derivative of total order `order`.
inline double fd_default_step(int order) {
  static constexpr double steps[] = {1e-3, 1e-3, 4e-3, 1.5e-2, 3e-2};
  return steps[std::clamp(order, 0, 4)];
}

/// d^alpha f(x) by central differences with one Richardson extrapolation
/// step: (4 D(h/2) - D(h)) / 3.
inline double fd_partial(const ScalarField& f, std::span<const double> x, std::span<const int> alpha,
                         double h = 0.0) {
  int total = 0;
  for (int a : alpha) total += a;
  if (total == 0) return f(x);
  if (h <= 0.0) h = fd_default_step(total);
  const double coarse = detail::central_difference(f, x, alpha, h);
  const double fine = detail::central_difference(f, x, alpha, 0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

using VectorField = std::function<Eigen::VectorXd(std::span<const double>)>;

/// d_i F(x) for a vector field, central differences plus one Richardson step.
inline Eigen::VectorXd fd_first(const VectorField& F, std::span<const double> x, int i, double h = 1e-3) {
  auto D = [&](double s) {
    std::vector<double> a(x.begin(), x.end()), b(x.begin(), x.end());
    a[i] += s;
    b[i] -= s;
    return Eigen::VectorXd((F(a) - F(b)) / (2.0 * s));
  };
  return (4.0 * D(0.5 * h) - D(h)) / 3.0;
}

/// d_i d_j F(x) for a vector field, central differences plus one Richardson step.
inline Eigen::VectorXd fd_second(const VectorField& F, std::span<const double> x, int i, int j,
                                 double h = 8e-3) {
  auto shifted = [&](double si, double sj) {
    std::vector<double> y(x.begin(), x.end());
    y[i] += si;
    y[j] += sj;
    return F(y);
  };
  auto D = [&](double s) -> Eigen::VectorXd {
    if (i == j) {
      std::vector<double> y(x.begin(), x.end());
      return (shifted(s, 0.0) - 2.0 * F(y) + shifted(-s, 0.0)) / (s * s);
    }
    return (shifted(s, s) - shifted(s, -s) - shifted(-s, s) + shifted(-s, -s)) / (4.0 * s * s);
  };
  return (4.0 * D(0.5 * h) - D(h)) / 3.0;
}

/// Ambient coordinate `component` of the immersion as a plain function of u,
/// without chart-domain checks so stencils may straddle the margin.
inline ScalarField immersion_component(const ImmersionSpec& spec, int component) {
  const Expr* e = spec.components.at(component).get();
  const Params* params = &spec.params;
  return [e, params](std::span<const double> u) { return evaluate(*e, u, *params); };
}

/// Copy of the immersion whose chart no longer rejects points near its edges;
/// used for stencils around sampled points.
inline ImmersionSpec widened_chart(const ImmersionSpec& spec, double pad = 1.0) {
  ImmersionSpec s = spec;
  s.margin = 0.0;
  for (auto& c : s.chart)
    if (!c.periodic) {
      c.lo -= pad;
      c.hi += pad;
    }
  return s;
}

}  // namespace gstress
