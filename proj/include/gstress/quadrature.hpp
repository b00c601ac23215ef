#pragma once

// Tensor-product quadrature over a chart with the Riemannian volume form
// sqrt(det g) du: Gauss-Legendre on bounded directions, the trapezoid rule on
// periodic ones.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <string>
#include <string_view>
#include <vector>

#include "gstress/errors.hpp"
#include "gstress/immersion.hpp"
#include "gstress/parallel.hpp"
#include "gstress/shape.hpp"
#include "gstress/stress_energy.hpp"

namespace gstress {

enum class RuleKind { gauss_legendre, trapezoid_periodic };

struct Rule1D {
  RuleKind kind = RuleKind::gauss_legendre;
  std::vector<double> nodes;
  std::vector<double> weights;

  int count() const { return static_cast<int>(nodes.size()); }
};

/// k-point Gauss-Legendre rule on [lo, hi]; nodes by Newton iteration on P_k.
inline Rule1D gauss_legendre(int k, double lo, double hi) {
  if (k < 1) throw ConfigError("Gauss-Legendre needs at least one node");
  Rule1D r{RuleKind::gauss_legendre, std::vector<double>(k), std::vector<double>(k)};
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  // P_k(x) and P_k'(x) by the three-term recurrence
  auto legendre = [k](double x) {
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= k; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    if (k == 1) p0 = 1.0;
    return std::pair{p1, k * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (int i = 0; i < (k + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (k + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = mid - half * x;
    r.nodes[k - 1 - i] = mid + half * x;
    r.weights[i] = r.weights[k - 1 - i] = half * w;
  }
  return r;
}

/// k equally spaced nodes on [lo, hi), equal weights (hi - lo) / k.
inline Rule1D trapezoid_periodic(int k, double lo, double hi) {
  if (k < 1) throw ConfigError("the periodic trapezoid rule needs at least one node");
  Rule1D r{RuleKind::trapezoid_periodic, std::vector<double>(k), std::vector<double>(k)};
  const double h = (hi - lo) / k;
  for (int i = 0; i < k; ++i) {
    r.nodes[i] = lo + i * h;
    r.weights[i] = h;
  }
  return r;
}

struct QuadratureGrid {
  std::vector<Rule1D> rules;

  std::size_t size() const {
    std::size_t s = 1;
    for (const auto& r : rules) s *= r.nodes.size();
    return s;
  }

  std::vector<int> counts() const {
    std::vector<int> c;
    for (const auto& r : rules) c.push_back(r.count());
    return c;
  }

  /// Node `index` in row-major order (the first direction varies slowest).
  void node(std::size_t index, ChartPoint& u, double& weight) const {
    const int m = static_cast<int>(rules.size());
    u.resize(m);
    weight = 1.0;
    for (int i = m - 1; i >= 0; --i) {
      const std::size_t k = rules[i].nodes.size();
      const std::size_t j = index % k;
      index /= k;
      u[i] = rules[i].nodes[j];
      weight *= rules[i].weights[j];
    }
  }
};

/// Default node counts: bounded / periodic = 64/128 (m=1), 32/64 (m=2),
/// 16/32 (m=3 and m=4).
inline std::vector<int> default_grid_counts(const ImmersionSpec& spec) {
  static constexpr int base[] = {0, 64, 32, 16, 16};
  std::vector<int> c;
  for (const auto& iv : spec.chart) c.push_back(iv.periodic ? 2 * base[spec.m] : base[spec.m]);
  return c;
}

/// Empty: defaults. One value N: N per bounded direction, 2N per periodic one.
/// m values: taken per direction.
inline std::vector<int> resolve_grid_counts(const ImmersionSpec& spec, const std::vector<int>& requested) {
  if (requested.empty()) return default_grid_counts(spec);
  for (int k : requested)
    if (k < 1) throw ConfigError("grid node counts must be positive");
  if (requested.size() == 1) {
    std::vector<int> c;
    for (const auto& iv : spec.chart) c.push_back(iv.periodic ? 2 * requested[0] : requested[0]);
    return c;
  }
  if (static_cast<int>(requested.size()) != spec.m)
    throw ConfigError("grid needs 1 or " + std::to_string(spec.m) + " node counts");
  return requested;
}

inline QuadratureGrid make_grid(const ImmersionSpec& spec, const std::vector<int>& counts) {
  if (static_cast<int>(counts.size()) != spec.m) throw ConfigError("grid dimension does not match m");
  QuadratureGrid g;
  for (int i = 0; i < spec.m; ++i) {
    const auto e = spec.effective(i);
    g.rules.push_back(e.periodic ? trapezoid_periodic(counts[i], e.lo, e.hi)
                                 : gauss_legendre(counts[i], e.lo, e.hi));
  }
  return g;
}

inline std::vector<int> doubled(std::vector<int> counts) {
  for (int& k : counts) k *= 2;
  return counts;
}

/// Neumaier's compensated sum, taken in the given order.
inline double compensated_sum(const std::vector<double>& xs) {
  double s = 0.0, c = 0.0;
  for (double x : xs) {
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}

// ---------------------------------------------------------------------------
// Scalar fields

enum class FieldId { one, energy_density, bienergy_density, trace_S2, tau_norm2, gauss_curvature, div_omega };

inline const std::vector<std::pair<FieldId, std::string_view>>& field_names() {
  static const std::vector<std::pair<FieldId, std::string_view>> names = {
      {FieldId::one, "one"},
      {FieldId::energy_density, "energy_density"},
      {FieldId::bienergy_density, "bienergy_density"},
      {FieldId::trace_S2, "trace_S2"},
      {FieldId::tau_norm2, "tau_norm2"},
      {FieldId::gauss_curvature, "gauss_curvature"},
      {FieldId::div_omega, "div_omega"},
  };
  return names;
}

inline FieldId field_from_name(std::string_view name) {
  for (const auto& [id, s] : field_names())
    if (s == name) return id;
  throw ConfigError("unknown field id '" + std::string(name) + "'");
}

inline std::string_view field_name(FieldId id) {
  for (const auto& [f, s] : field_names())
    if (f == id) return s;
  return "?";
}

/// Jet order a field needs at every node.
inline int field_order(FieldId id) {
  switch (id) {
    case FieldId::one: return 1;
    case FieldId::gauss_curvature: return 3;
    default: return kDefaultJetOrder;
  }
}

/// Field values at one node. Map quantities (energy, bienergy, trace_S2,
/// tau_norm2) belong to the Gauss map.
inline std::vector<double> evaluate_fields(const PointGeometry& geom, const std::vector<FieldId>& fields) {
  std::vector<double> out;
  std::optional<MapFields<TNMatrix>> gauss;
  auto gf = [&]() -> const MapFields<TNMatrix>& {
    if (!gauss) gauss = gauss_map_fields(geom);
    return *gauss;
  };
  for (FieldId id : fields) {
    switch (id) {
      case FieldId::one: out.push_back(1.0); break;
      case FieldId::energy_density: out.push_back(0.5 * dmap_norm2(gf())); break;
      case FieldId::bienergy_density: out.push_back(0.5 * inner(gf().tau, gf().tau)); break;
      case FieldId::trace_S2: out.push_back(metric_trace(geom.g_inv, biharmonic_S2(gf()).value)); break;
      case FieldId::tau_norm2: out.push_back(inner(gf().tau, gf().tau)); break;
      case FieldId::gauss_curvature:
        if (geom.m != 2) throw ConfigError("gauss_curvature is defined for surfaces (m = 2)");
        out.push_back(intrinsic_gauss_curvature(geom));
        break;
      case FieldId::div_omega: out.push_back(gauss_div_omega(geom)); break;
    }
  }
  return out;
}

/// sqrt(det g) from first derivatives only, with no chart or rank checks.
inline double volume_density_unchecked(const ImmersionSpec& spec, std::span<const double> u) {
  std::vector<Jet> vars;
  for (int i = 0; i < spec.m; ++i) vars.push_back(Jet::variable(i, u[i], spec.m, 1));
  Eigen::MatrixXd J(spec.n, spec.m);
  for (int a = 0; a < spec.n; ++a) {
    const Jet x = evaluate(*spec.components[a], std::span<const Jet>(vars), spec.params);
    for (int i = 0; i < spec.m; ++i) J(a, i) = x.derivative(i).value();
  }
  return std::sqrt(std::max(0.0, (J.transpose() * J).determinant()));
}

/// Integrals of several fields on one grid: sum_k w_k f(u_k) sqrt(det g(u_k)),
/// accumulated in node order.
inline std::vector<double> integrate_fields(const ImmersionSpec& spec, const std::vector<FieldId>& fields,
                                            const QuadratureGrid& grid) {
  int order = 1;
  for (FieldId id : fields) order = std::max(order, field_order(id));
  const bool volume_only = order == 1;
  const std::size_t N = grid.size(), F = fields.size();
  std::vector<double> terms(N * F);
  parallel_for(N, [&](std::size_t k) {
    ChartPoint u;
    double w;
    grid.node(k, u, w);
    if (volume_only) {
      const double v = w * volume_density_unchecked(spec, u);
      for (std::size_t f = 0; f < F; ++f) terms[k * F + f] = v;
      return;
    }
    const auto geom = point_geometry(spec, u, order);
    const auto vals = evaluate_fields(geom, fields);
    for (std::size_t f = 0; f < F; ++f) terms[k * F + f] = w * geom.vol_density * vals[f];
  });
  std::vector<double> out(F);
  std::vector<double> column(N);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t k = 0; k < N; ++k) column[k] = terms[k * F + f];
    out[f] = compensated_sum(column);
  }
  return out;
}

inline double integrate(const ImmersionSpec& spec, FieldId field, const QuadratureGrid& grid) {
  return integrate_fields(spec, {field}, grid)[0];
}

/// (integral of trace S2(G), (4 - m)/2 * integral of |tau(G)|^2), plus the raw
/// integral of |tau(G)|^2 and the volume for scaling.
struct Theorem1Pair {
  double trace_s2 = 0.0;
  double scaled_tau = 0.0;
  double tau_norm2 = 0.0;
  double volume = 0.0;
};

inline Theorem1Pair theorem1_integral_pair(const ImmersionSpec& spec, const QuadratureGrid& grid) {
  const auto v = integrate_fields(spec, {FieldId::trace_S2, FieldId::tau_norm2, FieldId::one}, grid);
  return {v[0], 0.5 * (4 - spec.m) * v[1], v[1], v[2]};
}

/// Volume left out by the chart margin: the same rule laid over the unmargined
/// chart minus the margined volume.
struct ExcludedVolume {
  double margined = 0.0;
  double full = 0.0;
  double excluded() const { return full - margined; }
};

inline ExcludedVolume excluded_volume(const ImmersionSpec& spec, const std::vector<int>& counts) {
  ExcludedVolume ev;
  ev.margined = integrate(spec, FieldId::one, make_grid(spec, counts));
  ImmersionSpec whole = spec;
  whole.margin = 0.0;
  ev.full = spec.margin > 0.0 ? integrate(whole, FieldId::one, make_grid(whole, counts)) : ev.margined;
  return ev;
}

}  // namespace gstress
