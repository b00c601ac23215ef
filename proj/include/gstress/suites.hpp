#pragma once

// Verification suites: each samples seeded chart points (and, for the integral
// suite, a quadrature grid), evaluates named residuals and collects them into a
// VerificationReport.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gstress/errors.hpp"
#include "gstress/fd_oracle.hpp"
#include "gstress/gaussmap.hpp"
#include "gstress/immersion.hpp"
#include "gstress/parallel.hpp"
#include "gstress/quadrature.hpp"
#include "gstress/report.hpp"
#include "gstress/shape.hpp"
#include "gstress/stress_energy.hpp"

namespace gstress {

inline constexpr std::uint64_t kDefaultSeed = 20240611;

/// Default lower bound on max|S2(G)| over the sample for a strictly convex
/// hypersurface that is not a round sphere.
inline constexpr double kTheorem4Floor = 1e-3;

enum class SuiteId {
  jets_fd,
  geometry,
  gauss_metric,
  ruh_vilms,
  stress_identities,
  theorem1,
  theorem2,
  theorem3_consistency,
  theorem4_consistency,
  all
};

inline const std::vector<std::pair<SuiteId, std::string>>& suite_names() {
  static const std::vector<std::pair<SuiteId, std::string>> names = {
      {SuiteId::jets_fd, "jets_fd"},
      {SuiteId::geometry, "geometry"},
      {SuiteId::gauss_metric, "gauss_metric"},
      {SuiteId::ruh_vilms, "ruh_vilms"},
      {SuiteId::stress_identities, "stress_identities"},
      {SuiteId::theorem1, "theorem1"},
      {SuiteId::theorem2, "theorem2"},
      {SuiteId::theorem3_consistency, "theorem3_consistency"},
      {SuiteId::theorem4_consistency, "theorem4_consistency"},
      {SuiteId::all, "all"},
  };
  return names;
}

inline SuiteId suite_from_name(const std::string& s) {
  for (const auto& [id, name] : suite_names())
    if (name == s) return id;
  throw ConfigError("unknown suite '" + s + "'");
}

inline const std::string& suite_name(SuiteId id) {
  for (const auto& [s, name] : suite_names())
    if (s == id) return name;
  throw ConfigError("unknown suite id");
}

/// Every check a suite can emit: name, anchor and default tolerance.
struct CheckInfo {
  std::string name;
  std::string anchor;
  double tolerance;
  Bound bound = Bound::upper;
};

inline const std::vector<CheckInfo>& check_catalog() {
  static const std::vector<CheckInfo> checks = {
      {"jet_constant_terms", "x_j(u) from jets = x_j(u) evaluated directly", 1e-13},
      {"jet_partials_vs_fd", "d^alpha x_j from jets = Richardson central differences, |alpha| <= 3", 1e-5},
      {"metric_inverse", "g_ij g^jk = delta_i^k", 1e-12},
      {"christoffel_symmetry", "Gamma^k_ij = Gamma^k_ji", 1e-12},
      {"second_fundamental_form_symmetry", "B_ij = B_ji", 1e-12},
      {"second_fundamental_form_normality", "P_T B_ij = 0", 1e-10},
      {"mean_curvature_normality", "P_T H = 0", 1e-10},
      {"frame_orthonormality", "<e_a, e_b> = delta_ab, <nu_a, nu_b> = delta_ab", 1e-12},
      {"tension_equals_mean_curvature", "tau(phi) = g^ij (d2_ij phi)^N = H", 1e-12},
      {"min_singular_value", "sigma_min(d phi) > 1e-8", 1e-8, Bound::lower},
      {"gauss_equation", "K from Gamma = (<B_11, B_22> - |B_12|^2) / det g", 1e-9},
      {"normal_derivative_vs_fd", "nabla-perp_i H = P_N d_i H (central differences)", 1e-5},
      {"plucker_unit_norm", "|e_1 ^ ... ^ e_m| = 1", 1e-12},
      {"canonical_metric", "g_can(dG(e_a), dG(e_b)) = sum_c <B(e_a, e_c), B(e_b, e_c)>", 1e-9},
      {"differential_factorization", "P_T dG(d_i) P_N = dG(d_i)", 1e-10},
      {"hodge_normal", "*(e_1 ^ ... ^ e_m) = +-nu", 1e-10},
      {"ruh_vilms", "tau(G) = sum_i e_i (x) nabla-perp_{e_i} H", 1e-7},
      {"tension_factorization", "P_T tau(G) P_N = tau(G)", 1e-9},
      {"nabla_tau_connection", "(nabla^M (x) nabla-perp) tau(G) = P_T d(tau(G)) P_N", 1e-7},
      {"trace_identity_immersion", "trace S2 = (m/2)|tau|^2 + (m - 2)<d phi, nabla tau>", 1e-9},
      {"trace_identity_gauss", "trace S2 = (m/2)|tau|^2 + (m - 2)<dG, nabla tau>", 1e-9},
      {"reform_identity_immersion", "S2 + R = (|tau|^2 + <d phi, nabla tau>) g", 1e-8},
      {"reform_identity_gauss", "S2 + R = (|tau|^2 + <dG, nabla tau>) g", 1e-8},
      {"div_S_immersion", "div S = -<tau(phi), d phi>", 1e-7},
      {"div_S_gauss", "div S = -<tau(G), dG>", 1e-7},
      {"bitension_vs_fd", "tau_2(phi) = -Delta H (central differences)", 1e-4},
      {"trace_chain_gauss",
       "1/2 trace S2 = |tau|^2 + <dG, nabla tau> = div <tau, dG> = div <nabla-perp H, B> "
       "= div div <H, B> - div <H, nabla-perp H>",
       1e-6},
      {"theorem1_integral", "int trace S2(G) = (4 - m)/2 int |tau(G)|^2", 1e-3},
      {"theorem1_grid_convergence", "integrals stable under grid doubling", 1e-3},
      {"divergence_integral", "int div <tau(G), dG> = 0", 1e-3},
      {"pseudo_umbilical_residual", "<B(X, Y), H> = (|H|^2 / m) <X, Y>", 1e-10},
      {"s2_immersion_max", "S2(phi) = 0 for pseudo-umbilical phi", 1e-9},
      {"s2_immersion_floor", "S2(phi) != 0 for non-pseudo-umbilical phi", 0.05, Bound::lower},
      {"s2_gauss_max", "S2(G) = 0", 1e-9},
      {"mean_curvature_stdev", "S2(G) = 0 implies |H| constant", 1e-10},
      {"strict_convexity", "principal curvatures of one strict sign", 1e-8, Bound::lower},
      {"s2_gauss_floor", "strictly convex and S2(G) = 0 implies a round sphere", kTheorem4Floor,
       Bound::lower},
  };
  return checks;
}

inline const CheckInfo& check_info(const std::string& name) {
  for (const auto& c : check_catalog())
    if (c.name == name) return c;
  throw ConfigError("unknown check '" + name + "'");
}

// ---------------------------------------------------------------------------
// Configuration

struct ImmersionRef {
  std::string source;  // catalog name or path to a definition file
  Params params;
  std::string graph_expression;
};

inline ImmersionSpec resolve_immersion(const ImmersionRef& ref) {
  const auto& entries = catalog_entries();
  for (const auto& e : entries)
    if (e.name == ref.source) return catalog_get(ref.source, ref.params, ref.graph_expression);
  if (std::filesystem::is_regular_file(ref.source)) {
    if (!ref.params.empty()) throw ConfigError("parameters of a definition file are set in the file");
    return load_immersion_file(ref.source);
  }
  throw ConfigError("'" + ref.source + "' is neither a catalog immersion nor a readable file");
}

struct SuiteConfig {
  SuiteId suite = SuiteId::all;
  std::string immersion;  // label echoed in the report
  ImmersionSpec spec;
  int points = 50;
  std::vector<int> grid;  // empty: quadrature defaults
  int order = kDefaultJetOrder;
  std::map<std::string, double> tolerances;
  std::uint64_t seed = kDefaultSeed;
  bool timing = false;
};

inline void validate(const SuiteConfig& cfg) {
  if (cfg.points < 1) throw ConfigError("points must be positive");
  if (cfg.order < kDefaultJetOrder || cfg.order > kMaxJetOrder)
    throw ConfigError("jet order must be in " + std::to_string(kDefaultJetOrder) + ".." +
                      std::to_string(kMaxJetOrder));
  for (const auto& [name, v] : cfg.tolerances) {
    check_info(name);
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("tolerance for '" + name + "' must be positive");
  }
  if (cfg.spec.m < 1) throw ConfigError("no immersion configured");
  resolve_grid_counts(cfg.spec, cfg.grid);
}

// ---------------------------------------------------------------------------
// Runner

class SuiteRunner {
 public:
  SuiteRunner(const SuiteConfig& cfg, VerificationReport& report)
      : cfg_(cfg), spec_(cfg.spec), report_(report),
        points_(sample_chart_points(cfg.spec, cfg.points, cfg.seed)) {}

  const SuiteConfig& config() const { return cfg_; }
  const ImmersionSpec& spec() const { return spec_; }
  const std::vector<ChartPoint>& points() const { return points_; }
  VerificationReport& report() { return report_; }

  double tolerance(const std::string& name) const {
    auto it = cfg_.tolerances.find(name);
    return it != cfg_.tolerances.end() ? it->second : check_info(name).tolerance;
  }

  void add(const std::string& name, double value, int points, bool extra_condition = true) {
    const auto& info = check_info(name);
    CheckRecord r{name, info.anchor, value, tolerance(name), false, points, info.bound};
    const bool ok = info.bound == Bound::upper ? value <= r.tolerance : value >= r.tolerance;
    r.pass = std::isfinite(value) && ok && extra_condition && points > 0;
    report_.checks.push_back(std::move(r));
  }

  /// Evaluates fn at every sampled point. fn returns one optional value per
  /// named check (nullopt: not applicable at that point). Points raising a
  /// singular-point or degeneracy error are counted; more than 1% of them fail
  /// every check of the batch.
  template <class Fn>
  void point_checks(const std::vector<std::string>& names, Fn&& fn) {
    point_checks(names, points_, std::forward<Fn>(fn));
  }

  template <class Fn>
  void point_checks(const std::vector<std::string>& names, const std::vector<ChartPoint>& pts, Fn&& fn) {
    using Row = std::vector<std::optional<double>>;
    std::vector<std::optional<Row>> rows(pts.size());
    parallel_for(pts.size(), [&](std::size_t k) {
      try {
        rows[k] = fn(pts[k]);
      } catch (const SingularPointError&) {
      } catch (const DegenerateImmersionError&) {
      }
    });
    std::size_t failed = 0;
    for (const auto& r : rows)
      if (!r) ++failed;
    const bool few_failures = failed * 100 <= pts.size();
    for (std::size_t c = 0; c < names.size(); ++c) {
      const bool lower = check_info(names[c]).bound == Bound::lower;
      double agg = lower ? std::numeric_limits<double>::infinity() : 0.0;
      int count = 0;
      bool nan = false;
      for (const auto& r : rows) {
        if (!r || !(*r)[c]) continue;
        const double v = *(*r)[c];
        if (std::isnan(v)) nan = true;
        agg = lower ? std::min(agg, v) : std::max(agg, v);
        ++count;
      }
      if (count == 0) continue;
      add(names[c], nan ? std::numeric_limits<double>::quiet_NaN() : agg, count, few_failures);
    }
  }

 private:
  const SuiteConfig& cfg_;
  const ImmersionSpec& spec_;
  VerificationReport& report_;
  std::vector<ChartPoint> points_;
};

namespace detail {

inline double rel(double err, double scale) { return err / std::max(1.0, scale); }

inline double max_frame_component(const SymTensor2& t, const PointGeometry& geom) {
  return frame_components(t, geom).cwiseAbs().maxCoeff();
}

inline bool is_hypersurface(const ImmersionSpec& spec) { return spec.n == spec.m + 1; }

// ---- jets_fd

inline void suite_jets_fd(SuiteRunner& run) {
  const auto& spec = run.spec();
  const MonomialTable* table = monomial_table(spec.m, 3);
  const std::size_t count = table->count_upto[3];
  std::vector<std::vector<int>> alphas;
  for (std::size_t k = 0; k < count; ++k)
    alphas.emplace_back(table->exponents[k].begin(), table->exponents[k].begin() + spec.m);
  std::vector<ScalarField> comps;
  for (int a = 0; a < spec.n; ++a) comps.push_back(immersion_component(spec, a));
  const int order = run.config().order;
  run.point_checks({"jet_constant_terms", "jet_partials_vs_fd"}, [&](const ChartPoint& u) {
    const auto jets = eval_immersion(spec, u, order);
    double constant = 0.0, partial = 0.0;
    for (int a = 0; a < spec.n; ++a) {
      const double direct = comps[a](u);
      constant = std::max(constant, rel(std::abs(jets[a].value() - direct), std::abs(direct)));
      for (const auto& alpha : alphas) {
        const double jv = jets[a].partial(alpha);
        const double fd = fd_partial(comps[a], u, alpha);
        partial = std::max(partial, rel(std::abs(jv - fd), std::abs(jv)));
      }
    }
    return std::vector<std::optional<double>>{constant, partial};
  });
}

// ---- geometry

inline void suite_geometry(SuiteRunner& run) {
  const auto& spec = run.spec();
  const int order = run.config().order;
  const ImmersionSpec wide = widened_chart(spec);
  const VectorField Hfield = [&](std::span<const double> u) { return point_geometry(wide, u, 2).H; };
  std::vector<std::string> names = {"metric_inverse",
                                    "christoffel_symmetry",
                                    "second_fundamental_form_symmetry",
                                    "second_fundamental_form_normality",
                                    "mean_curvature_normality",
                                    "frame_orthonormality",
                                    "tension_equals_mean_curvature",
                                    "min_singular_value",
                                    "normal_derivative_vs_fd"};
  if (spec.m == 2) names.push_back("gauss_equation");
  run.point_checks(names, [&](const ChartPoint& u) {
    const auto geom = point_geometry(spec, u, order);
    const int m = geom.m, n = geom.n;
    std::vector<std::optional<double>> out;
    out.push_back((geom.g * geom.g_inv - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff());
    double gsym = 0.0, bsym = 0.0, bnorm = 0.0;
    for (int k = 0; k < m; ++k)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) gsym = std::max(gsym, std::abs(geom.Gamma(k, i, j) - geom.Gamma(k, j, i)));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        bsym = std::max(bsym, (geom.b(i, j) - geom.b(j, i)).cwiseAbs().maxCoeff());
        bnorm = std::max(bnorm, rel((geom.P_T * geom.b(i, j)).norm(), geom.b(i, j).norm()));
      }
    out.push_back(gsym);
    out.push_back(bsym);
    out.push_back(bnorm);
    out.push_back(rel((geom.P_T * geom.H).norm(), geom.H.norm()));
    Eigen::MatrixXd frame(n, n);
    frame << geom.tangent_frame, geom.normal_frame;
    out.push_back((frame.transpose() * frame - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff());
    out.push_back(rel((immersion_tension_by_projection(geom) - geom.H).norm(), geom.H.norm()));
    out.push_back(jacobian_singular_values(spec, u).minCoeff());
    double nd = 0.0;
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd jet = normal_derivative(geom, geom.jets->H, i);
      const Eigen::VectorXd fd = geom.P_N * fd_first(Hfield, u, i);
      nd = std::max(nd, rel((jet - fd).norm(), jet.norm()));
    }
    out.push_back(nd);
    if (m == 2) out.push_back(std::abs(intrinsic_gauss_curvature(geom) - extrinsic_gauss_curvature(geom)));
    return out;
  });
}

// ---- gauss_metric

inline void suite_gauss_metric(SuiteRunner& run) {
  const auto& spec = run.spec();
  const int order = run.config().order;
  std::vector<std::string> names = {"plucker_unit_norm", "canonical_metric", "differential_factorization"};
  if (is_hypersurface(spec)) names.push_back("hodge_normal");
  run.point_checks(names, [&](const ChartPoint& u) {
    const auto geom = point_geometry(spec, u, order);
    const auto G = gauss_plucker(*geom.jets);
    const Eigen::VectorXd g0 = G.value();
    std::vector<std::optional<double>> out;
    out.push_back(std::abs(g0.norm() - 1.0));
    out.push_back(canonical_metric(geom, G).residual());
    double fac = 0.0;
    for (const auto& A : gauss_differential(geom)) fac = std::max(fac, rel(tn_factorization_residual(A, geom), A.norm()));
    out.push_back(fac);
    if (is_hypersurface(spec)) {
      const Eigen::VectorXd h = hodge_normal(g0, geom.n, geom.m);
      const Eigen::VectorXd nu = geom.normal_frame.col(0);
      out.push_back(std::min((h - nu).norm(), (h + nu).norm()));
    }
    return out;
  });
}

// ---- ruh_vilms

inline void suite_ruh_vilms(SuiteRunner& run) {
  const auto& spec = run.spec();
  const int order = run.config().order;
  run.point_checks({"ruh_vilms", "tension_factorization", "nabla_tau_connection"}, [&](const ChartPoint& u) {
    const auto geom = point_geometry(spec, u, order);
    const auto G = gauss_plucker(*geom.jets);
    const auto gj = gauss_jets(*geom.jets);
    const TNMatrix tau = gauss_tension(geom, gj);
    const double rv = (tau - plucker_tension(geom, G)).norm();
    const double fac = rel(tn_factorization_residual(tau, geom), tau.norm());
    const auto a = gauss_nabla_tau(geom, gj);
    const auto b = gauss_nabla_tau_extrinsic(geom, gj);
    double conn = 0.0;
    for (int l = 0; l < geom.m; ++l) conn = std::max(conn, rel((a[l] - b[l]).norm(), a[l].norm()));
    return std::vector<std::optional<double>>{rv, fac, conn};
  });
}

// ---- stress_identities

inline void suite_stress_identities(SuiteRunner& run) {
  const auto& spec = run.spec();
  const int order = run.config().order;
  const ImmersionSpec wide = widened_chart(spec);
  const VectorField Hfield = [&](std::span<const double> u) { return point_geometry(wide, u, 2).H; };
  std::vector<std::string> names = {"trace_identity_immersion", "reform_identity_immersion", "div_S_immersion",
                                    "trace_identity_gauss",     "reform_identity_gauss",     "div_S_gauss",
                                    "bitension_vs_fd"};
  if (spec.m == 4) names.push_back("trace_chain_gauss");
  run.point_checks(names, [&](const ChartPoint& u) {
    const auto geom = point_geometry(spec, u, order);
    const int m = geom.m;
    const auto fi = immersion_fields(geom, true);
    const auto fg = gauss_map_fields(geom, true);
    std::vector<std::optional<double>> out = {
        s2_trace_identity_residual(fi), reform_identity_residual(fi), div_S_residual(fi),
        s2_trace_identity_residual(fg), reform_identity_residual(fg), div_S_residual(fg)};
    // -Delta H with every derivative of H taken by central differences
    std::vector<Eigen::VectorXd> dH(m);
    for (int k = 0; k < m; ++k) dH[k] = fd_first(Hfield, u, k);
    Eigen::VectorXd lap = Eigen::VectorXd::Zero(geom.n);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        Eigen::VectorXd hess = fd_second(Hfield, u, i, j);
        for (int k = 0; k < m; ++k) hess -= geom.Gamma(k, i, j) * dH[k];
        lap += (i == j ? 1.0 : 2.0) * geom.g_inv(i, j) * hess;
      }
    const Eigen::VectorXd tau2 = bitension_flat(geom);
    out.push_back(rel((tau2 + lap).norm(), tau2.norm()));
    if (m == 4) out.push_back(s2_gauss_trace_chain(geom).residual());
    return out;
  });
}

// ---- theorem1

inline void suite_theorem1(SuiteRunner& run) {
  const auto& spec = run.spec();
  const auto counts = resolve_grid_counts(spec, run.config().grid);
  const std::vector<FieldId> fields = {FieldId::trace_S2, FieldId::tau_norm2, FieldId::one, FieldId::div_omega};
  const auto grid = make_grid(spec, counts);
  const auto v = integrate_fields(spec, fields, grid);
  const int nodes = static_cast<int>(grid.size());
  const double lhs = v[0], rhs = 0.5 * (4 - spec.m) * v[1], volume = v[2];
  const double scale = std::max(v[1], 1e-5 * volume);
  auto& rep = run.report();
  rep.integrals.push_back({"trace_S2_vs_scaled_tau_norm2", lhs, rhs, std::abs(lhs - rhs) / scale, counts});
  run.add("theorem1_integral", std::abs(lhs - rhs) / scale, nodes);
  if (spec.m <= 2) {
    const auto counts2 = doubled(counts);
    const auto grid2 = make_grid(spec, counts2);
    const auto w = integrate_fields(spec, fields, grid2);
    const double lhs2 = w[0], rhs2 = 0.5 * (4 - spec.m) * w[1];
    rep.integrals.push_back({"trace_S2_vs_scaled_tau_norm2_doubled_grid", lhs2, rhs2,
                             std::abs(lhs2 - rhs2) / scale, counts2});
    const double floor = 1e-5 * volume;
    const double change = std::max(std::abs(lhs2 - lhs) / std::max(std::abs(lhs), floor),
                                   std::abs(rhs2 - rhs) / std::max(std::abs(rhs), floor));
    run.add("theorem1_grid_convergence", change, static_cast<int>(grid2.size()));
  }
  rep.integrals.push_back({"div_omega", v[3], 0.0, std::abs(v[3]) / scale, counts});
  run.add("divergence_integral", std::abs(v[3]) / scale, nodes);
  const auto ev = excluded_volume(spec, counts);
  rep.integrals.push_back({"excluded_cap_volume", ev.excluded(), ev.full,
                           ev.full > 0.0 ? ev.excluded() / ev.full : 0.0, counts});
}

// ---- theorem2

inline void suite_theorem2(SuiteRunner& run) {
  const auto& spec = run.spec();
  if (spec.m != 4) throw ConfigError("theorem2 concerns 4-dimensional submanifolds (m = 4)");
  const int order = run.config().order;
  struct Sample {
    double pu;
    double s2;
  };
  const auto& pts = run.points();
  std::vector<std::optional<Sample>> samples(pts.size());
  parallel_for(pts.size(), [&](std::size_t k) {
    try {
      const auto geom = point_geometry(spec, pts[k], order);
      samples[k] = Sample{pseudo_umbilical_residual(geom).residual,
                          max_frame_component(biharmonic_S2(immersion_fields(geom, false)), geom)};
    } catch (const SingularPointError&) {
    } catch (const DegenerateImmersionError&) {
    }
  });
  double pu_max = 0.0;
  for (const auto& s : samples)
    if (s) pu_max = std::max(pu_max, s->pu);
  const bool pseudo_umbilical = pu_max <= run.tolerance("pseudo_umbilical_residual");
  auto lookup = [&](const ChartPoint& u) -> std::vector<std::optional<double>> {
    const std::size_t k = static_cast<std::size_t>(&u - pts.data());
    if (!samples[k]) throw SingularPointError("point failed");
    if (pseudo_umbilical) return {samples[k]->pu, samples[k]->s2};
    return {samples[k]->s2};
  };
  if (pseudo_umbilical)
    run.point_checks({"pseudo_umbilical_residual", "s2_immersion_max"}, lookup);
  else
    run.point_checks({"s2_immersion_floor"}, lookup);
}

// ---- theorem3_consistency

inline void suite_theorem3(SuiteRunner& run) {
  const auto& spec = run.spec();
  const int order = run.config().order;
  run.point_checks({"s2_gauss_max"}, [&](const ChartPoint& u) {
    const auto geom = point_geometry(spec, u, order);
    return std::vector<std::optional<double>>{max_frame_component(biharmonic_S2(gauss_map_fields(geom)), geom)};
  });
  const auto grid = chart_grid(spec, 5);
  std::vector<double> h(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) { h[k] = point_geometry(spec, grid[k], 2).H.norm(); });
  double mean = compensated_sum(h) / h.size();
  std::vector<double> sq(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) sq[k] = (h[k] - mean) * (h[k] - mean);
  run.add("mean_curvature_stdev", std::sqrt(compensated_sum(sq) / h.size()), static_cast<int>(h.size()));
}

// ---- theorem4_consistency

inline void suite_theorem4(SuiteRunner& run) {
  const auto& spec = run.spec();
  if (!is_hypersurface(spec)) throw ConfigError("theorem4_consistency needs a hypersurface (n = m + 1)");
  const int order = run.config().order;
  const auto grid = chart_grid(spec, 5);
  const auto conv = strict_convexity_check(spec, grid);
  run.report().flags.strictly_convex = conv.strictly_convex;
  run.add("strict_convexity", conv.strictly_convex ? conv.min_abs_curvature : 0.0, conv.points,
          conv.strictly_convex);
  // umbilicity over the same grid decides which direction of the statement applies
  double spread = 0.0;
  for (const auto& p : grid) {
    const auto k = principal_curvatures(point_geometry(spec, p, 2));
    spread = std::max(spread, (k.maxCoeff() - k.minCoeff()) / std::max(1e-300, k.cwiseAbs().maxCoeff()));
  }
  const bool sphere = spread <= 1e-8;
  if (sphere) {
    run.point_checks({"s2_gauss_max"}, [&](const ChartPoint& u) {
      const auto geom = point_geometry(spec, u, order);
      return std::vector<std::optional<double>>{max_frame_component(biharmonic_S2(gauss_map_fields(geom)), geom)};
    });
    return;
  }
  // largest |S2(G)| over the sample must clear the floor
  const auto& pts = run.points();
  std::vector<std::optional<double>> s2(pts.size());
  parallel_for(pts.size(), [&](std::size_t k) {
    try {
      const auto geom = point_geometry(spec, pts[k], order);
      s2[k] = max_frame_component(biharmonic_S2(gauss_map_fields(geom)), geom);
    } catch (const SingularPointError&) {
    } catch (const DegenerateImmersionError&) {
    }
  });
  double best = 0.0;
  int count = 0;
  for (const auto& v : s2)
    if (v) best = std::max(best, *v), ++count;
  run.add("s2_gauss_floor", best, count, count * 100 >= static_cast<int>(pts.size()) * 99);
}

inline void compute_flags(SuiteRunner& run) {
  const auto& spec = run.spec();
  const auto& pts = run.points();
  struct Flags {
    double pu;
    bool minimal;
    int sign;  // +1 / -1 if all principal curvatures share a strict sign, 0 otherwise
  };
  std::vector<std::optional<Flags>> f(pts.size());
  parallel_for(pts.size(), [&](std::size_t k) {
    try {
      const auto geom = point_geometry(spec, pts[k], 2);
      const auto pu = pseudo_umbilical_residual(geom);
      int sign = 0;
      if (is_hypersurface(spec)) {
        const auto kap = principal_curvatures(geom);
        sign = kap.minCoeff() > 0.0 ? 1 : kap.maxCoeff() < 0.0 ? -1 : 0;
      }
      f[k] = Flags{pu.residual, pu.minimal, sign};
    } catch (const SingularPointError&) {
    } catch (const DegenerateImmersionError&) {
    }
  });
  bool pu = true, minimal = true, convex = is_hypersurface(spec);
  int sign = 0;
  for (const auto& x : f) {
    if (!x) continue;
    pu = pu && x->pu <= 1e-10;
    minimal = minimal && x->minimal;
    if (x->sign == 0 || (sign != 0 && x->sign != sign)) convex = false;
    sign = x->sign;
  }
  auto& flags = run.report().flags;
  flags.pseudo_umbilical = pu;
  flags.minimal = minimal;
  flags.strictly_convex = convex;
}

inline void run_one(SuiteRunner& run, SuiteId id) {
  switch (id) {
    case SuiteId::jets_fd: suite_jets_fd(run); break;
    case SuiteId::geometry: suite_geometry(run); break;
    case SuiteId::gauss_metric: suite_gauss_metric(run); break;
    case SuiteId::ruh_vilms: suite_ruh_vilms(run); break;
    case SuiteId::stress_identities: suite_stress_identities(run); break;
    case SuiteId::theorem1: suite_theorem1(run); break;
    case SuiteId::theorem2: suite_theorem2(run); break;
    case SuiteId::theorem3_consistency: suite_theorem3(run); break;
    case SuiteId::theorem4_consistency: suite_theorem4(run); break;
    case SuiteId::all: break;
  }
}

}  // namespace detail

inline nlohmann::ordered_json config_json(const SuiteConfig& cfg) {
  nlohmann::ordered_json c;
  c["suite"] = suite_name(cfg.suite);
  c["immersion"] = cfg.immersion.empty() ? cfg.spec.name : cfg.immersion;
  c["params"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : cfg.spec.params) c["params"][k] = v;
  c["m"] = cfg.spec.m;
  c["n"] = cfg.spec.n;
  c["margin"] = cfg.spec.margin;
  c["points"] = cfg.points;
  c["grid"] = resolve_grid_counts(cfg.spec, cfg.grid);
  c["order"] = cfg.order;
  c["tolerances"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : cfg.tolerances) c["tolerances"][k] = v;
  c["seed"] = cfg.seed;
  return c;
}

/// The suites `all` expands to for a given immersion.
inline std::vector<SuiteId> expand_suite(SuiteId id, const ImmersionSpec& spec) {
  if (id != SuiteId::all) return {id};
  std::vector<SuiteId> ids = {SuiteId::jets_fd,      SuiteId::geometry,          SuiteId::gauss_metric,
                              SuiteId::ruh_vilms,    SuiteId::stress_identities, SuiteId::theorem1};
  if (spec.m == 4) ids.push_back(SuiteId::theorem2);
  return ids;
}

inline VerificationReport run_suite(const SuiteConfig& cfg) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  VerificationReport report;
  report.config = config_json(cfg);
  report.seed = cfg.seed;
  SuiteRunner run(cfg, report);
  detail::compute_flags(run);
  for (SuiteId id : expand_suite(cfg.suite, cfg.spec)) detail::run_one(run, id);
  if (cfg.timing)
    report.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace gstress
