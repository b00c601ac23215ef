// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gstress/suites.hpp"

using namespace gstress;

namespace {

// pinned tolerances
constexpr double kJetFdTol = 1e-5;
constexpr double kJetFdSeconds = 10.0;
constexpr double kCanonicalTol = 1e-9;
constexpr double kCanonicalSeconds = 60.0;
constexpr double kRuhVilmsTol = 1e-7;
constexpr double kHarmonicTauTol = 1e-9;
constexpr double kTraceTol = 1e-9;
constexpr double kChainTol = 1e-6;
constexpr double kIntegralTol = 1e-3;
constexpr double kIntegralSeconds = 300.0;
constexpr double kS2ImmersionTol = 1e-9;
constexpr double kS2ImmersionFloor = 0.05;
constexpr double kPseudoUmbilicalFloor = 0.1;
constexpr double kS2GaussTol = 1e-9;
constexpr double kMeanCurvatureStdevTol = 1e-10;
// measured max|S2(G)| on ellipsoid4(1, 1.1, 1.2, 1.3, 1.4) at 50 seeded points: 3.035
constexpr double kEllipsoid4S2GaussFloor = 1.5;
constexpr double kDivSTol = 1e-7;
constexpr double kReformTol = 1e-8;
constexpr double kPipelineTol = 1e-3;

constexpr double kPi = std::numbers::pi;

struct Instance {
  std::string label;
  ImmersionSpec spec;
};

ImmersionSpec sphere(int m, double r) { return catalog_get("sphere", {{"m", m}, {"r", r}}); }
ImmersionSpec ellipsoid() { return catalog_get("ellipsoid", {{"a", 2}, {"b", 1.5}, {"c", 1}}); }
ImmersionSpec ellipsoid4() {
  return catalog_get("ellipsoid4", {{"a1", 1}, {"a2", 1.1}, {"a3", 1.2}, {"a4", 1.3}, {"a5", 1.4}});
}
ImmersionSpec torus() { return catalog_get("torus", {{"R", 2}, {"r", 0.5}}); }
ImmersionSpec catenoid() { return catalog_get("catenoid", {{"c", 1}}); }
ImmersionSpec clifford() { return catalog_get("clifford_torus", {{"r", 1}}); }
ImmersionSpec product_spheres() { return catalog_get("product_spheres", {{"r", 1}, {"rho", 2}}); }

std::vector<Instance> catalog_instances() {
  return {{"plane", catalog_get("plane", {})},
          {"sphere2", sphere(2, 1)},
          {"sphere3", sphere(3, 1)},
          {"sphere4", sphere(4, 1.5)},
          {"ellipsoid", ellipsoid()},
          {"ellipsoid4", ellipsoid4()},
          {"torus", torus()},
          {"clifford_torus", clifford()},
          {"catenoid", catenoid()},
          {"product_spheres", product_spheres()},
          {"graph", catalog_get("graph", {{"m", 2}}, "u1^3 - 3*u1*u2^2 + 0.5*sin(u2)")}};
}

std::vector<Instance> canonical_instances() {
  return {{"sphere2", sphere(2, 1)},   {"ellipsoid", ellipsoid()}, {"torus", torus()},
          {"catenoid", catenoid()},    {"clifford_torus", clifford()}, {"sphere4", sphere(4, 1)},
          {"ellipsoid4", ellipsoid4()}, {"product_spheres", product_spheres()}};
}

VerificationReport run(SuiteId suite, const ImmersionSpec& spec, int points,
                       std::map<std::string, double> tolerances = {}) {
  SuiteConfig c;
  c.suite = suite;
  c.immersion = spec.name;
  c.spec = spec;
  c.points = points;
  c.tolerances = std::move(tolerances);
  return run_suite(c);
}

const CheckRecord* find(const VerificationReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

class Outcome {
 public:
  void need(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (!failures_.empty()) failures_ += "; ";
      failures_ += what;
    }
  }
  void note(const std::string& s) {
    if (!notes_.empty()) notes_ += ", ";
    notes_ += s;
  }
  bool pass() const { return pass_; }
  std::string detail() const { return pass_ ? notes_ : failures_; }

 private:
  bool pass_ = true;
  std::string notes_, failures_;
};

// upper check present, passing and within the pinned tolerance
void need_upper(Outcome& o, const VerificationReport& r, const std::string& check, double tol,
                const std::string& label, double& worst) {
  const auto* c = find(r, check);
  if (!c) return o.need(false, label + " " + check + " missing");
  worst = std::max(worst, std::isfinite(c->max_residual) ? c->max_residual : INFINITY);
  o.need(c->pass && c->max_residual <= tol, label + " " + check + " = " + sci(c->max_residual));
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult cli(const std::string& args) {
  CliResult r;
  FILE* p = popen((std::string(GSTRESS_BIN) + " " + args + " 2>/dev/null").c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// ---- criteria

Outcome jet_oracle() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& [label, spec] : catalog_instances()) {
    const auto r = run(SuiteId::jets_fd, spec, 50, {{"jet_partials_vs_fd", kJetFdTol}});
    need_upper(o, r, "jet_partials_vs_fd", kJetFdTol, label, worst);
    o.need(find(r, "jet_partials_vs_fd") && find(r, "jet_partials_vs_fd")->points == 50, label + " sampled < 50");
  }
  const double secs = seconds_since(t0);
  o.need(secs < kJetFdSeconds, "runtime " + sci(secs) + " s");
  o.note("max rel " + sci(worst) + " <= " + sci(kJetFdTol));
  o.note(sci(secs) + " s");
  return o;
}

Outcome canonical_metric_identity() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& [label, spec] : canonical_instances()) {
    const auto r = run(SuiteId::gauss_metric, spec, 50, {{"canonical_metric", kCanonicalTol}});
    need_upper(o, r, "canonical_metric", kCanonicalTol, label, worst);
  }
  const double secs = seconds_since(t0);
  o.need(secs < kCanonicalSeconds, "runtime " + sci(secs) + " s");
  o.note("max " + sci(worst) + " <= " + sci(kCanonicalTol));
  o.note(sci(secs) + " s");
  return o;
}

Outcome ruh_vilms() {
  Outcome o;
  double worst = 0.0;
  const std::vector<Instance> instances = {{"sphere2", sphere(2, 1)},   {"ellipsoid", ellipsoid()},
                                           {"torus", torus()},         {"catenoid", catenoid()},
                                           {"clifford_torus", clifford()}, {"sphere4", sphere(4, 1)},
                                           {"ellipsoid4", ellipsoid4()}, {"product_spheres", product_spheres()}};
  for (const auto& [label, spec] : instances) {
    const auto r = run(SuiteId::ruh_vilms, spec, spec.m == 2 ? 50 : 20, {{"ruh_vilms", kRuhVilmsTol}});
    need_upper(o, r, "ruh_vilms", kRuhVilmsTol, label, worst);
  }
  double harmonic = 0.0;
  const std::vector<Instance> harmonic_cases = {{"sphere2", sphere(2, 1)}, {"sphere4", sphere(4, 1)},
                                                {"catenoid", catenoid()}, {"product_spheres", product_spheres()}};
  for (const auto& [label, spec] : harmonic_cases)
    for (const auto& u : sample_chart_points(spec, spec.m == 2 ? 50 : 20, kDefaultSeed)) {
      const double t = gauss_tension(point_geometry(spec, u)).norm();
      harmonic = std::max(harmonic, t);
      o.need(t <= kHarmonicTauTol, label + " |tau(G)| = " + sci(t));
    }
  o.note("max " + sci(worst) + " <= " + sci(kRuhVilmsTol));
  o.note("harmonic |tau(G)| " + sci(harmonic) + " <= " + sci(kHarmonicTauTol));
  return o;
}

struct StressRun {
  std::string label;
  VerificationReport report;
};

const std::vector<StressRun>& stress_runs() {
  static const std::vector<StressRun> runs = [] {
    std::vector<StressRun> out;
    for (const auto& [label, spec] : catalog_instances())
      out.push_back({label, run(SuiteId::stress_identities, spec, 25,
                                {{"trace_identity_immersion", kTraceTol},
                                 {"trace_identity_gauss", kTraceTol},
                                 {"reform_identity_immersion", kReformTol},
                                 {"reform_identity_gauss", kReformTol},
                                 {"div_S_immersion", kDivSTol},
                                 {"div_S_gauss", kDivSTol}})});
    return out;
  }();
  return runs;
}

Outcome trace_identity() {
  Outcome o;
  double worst = 0.0;
  for (const auto& [label, r] : stress_runs())
    for (const char* c : {"trace_identity_immersion", "trace_identity_gauss"}) need_upper(o, r, c, kTraceTol, label, worst);
  double chain = 0.0;
  const auto e4 = ellipsoid4();
  for (const auto& u : sample_chart_points(e4, 20, kDefaultSeed)) {
    const double c = s2_gauss_trace_chain(point_geometry(e4, u)).residual();
    chain = std::max(chain, c);
    o.need(c <= kChainTol, "ellipsoid4 chain = " + sci(c));
  }
  o.note("trace max " + sci(worst) + " <= " + sci(kTraceTol));
  o.note("ellipsoid4 chain " + sci(chain) + " <= " + sci(kChainTol));
  return o;
}

Outcome theorem1_integrals() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto e = ellipsoid();
  const auto counts = default_grid_counts(e);
  const auto p = theorem1_integral_pair(e, make_grid(e, counts));
  const auto q = theorem1_integral_pair(e, make_grid(e, doubled(counts)));
  const double rel_pair = std::abs(p.trace_s2 - p.scaled_tau) / std::abs(p.scaled_tau);
  const double rel_lhs = std::abs(q.trace_s2 - p.trace_s2) / std::abs(p.trace_s2);
  const double rel_rhs = std::abs(q.scaled_tau - p.scaled_tau) / std::abs(p.scaled_tau);
  o.need(rel_pair <= kIntegralTol, "ellipsoid rel diff " + sci(rel_pair));
  o.need(rel_lhs < kIntegralTol, "ellipsoid trace S2 doubling change " + sci(rel_lhs));
  o.need(rel_rhs < kIntegralTol, "ellipsoid |tau|^2 doubling change " + sci(rel_rhs));

  const auto e4 = ellipsoid4();
  const auto p4 = theorem1_integral_pair(e4, make_grid(e4, default_grid_counts(e4)));
  const double ratio = std::abs(p4.trace_s2) / p4.tau_norm2;
  o.need(ratio <= kIntegralTol, "ellipsoid4 |int trace S2| / int |tau|^2 = " + sci(ratio));
  const double secs = seconds_since(t0);
  o.need(secs < kIntegralSeconds, "runtime " + sci(secs) + " s");
  o.note("ellipsoid rel " + sci(rel_pair) + ", doubling " + sci(std::max(rel_lhs, rel_rhs)));
  o.note("ellipsoid4 ratio " + sci(ratio) + " <= " + sci(kIntegralTol));
  o.note(sci(secs) + " s");
  return o;
}

Outcome theorem2() {
  Outcome o;
  double worst = 0.0;
  const auto s = run(SuiteId::theorem2, sphere(4, 1.5), 50, {{"s2_immersion_max", kS2ImmersionTol}});
  need_upper(o, s, "s2_immersion_max", kS2ImmersionTol, "sphere4", worst);
  o.need(s.flags.pseudo_umbilical && !s.flags.minimal, "sphere4 flags");

  const auto ps = product_spheres();
  const auto r = run(SuiteId::theorem2, ps, 50, {{"s2_immersion_floor", kS2ImmersionFloor}});
  const auto* floor = find(r, "s2_immersion_floor");
  o.need(floor && floor->pass && floor->points == 50 && floor->max_residual > kS2ImmersionFloor,
         "product_spheres floor " + (floor ? sci(floor->max_residual) : std::string("missing")));
  double pu = INFINITY;
  for (const auto& u : sample_chart_points(ps, 50, kDefaultSeed))
    pu = std::min(pu, pseudo_umbilical_residual(point_geometry(ps, u, 2)).residual);
  o.need(pu > kPseudoUmbilicalFloor, "product_spheres pseudo-umbilical residual " + sci(pu));
  o.note("sphere4 " + sci(worst) + " <= " + sci(kS2ImmersionTol));
  if (floor) o.note("product_spheres min " + sci(floor->max_residual) + " > " + sci(kS2ImmersionFloor));
  return o;
}

Outcome theorems3_and_4() {
  Outcome o;
  double worst = 0.0;
  const auto s4 = sphere(4, 1.5);
  const auto r3 = run(SuiteId::theorem3_consistency, s4, 50,
                      {{"s2_gauss_max", kS2GaussTol}, {"mean_curvature_stdev", kMeanCurvatureStdevTol}});
  need_upper(o, r3, "s2_gauss_max", kS2GaussTol, "sphere4", worst);
  double stdev = 0.0;
  need_upper(o, r3, "mean_curvature_stdev", kMeanCurvatureStdevTol, "sphere4", stdev);

  const auto r4 = run(SuiteId::theorem4_consistency, s4, 50, {{"s2_gauss_max", kS2GaussTol}});
  o.need(r4.flags.strictly_convex, "sphere4 not strictly convex");
  need_upper(o, r4, "s2_gauss_max", kS2GaussTol, "sphere4 theorem4", worst);

  const auto e4 = run(SuiteId::theorem4_consistency, ellipsoid4(), 50, {{"s2_gauss_floor", kEllipsoid4S2GaussFloor}});
  o.need(e4.flags.strictly_convex, "ellipsoid4 not strictly convex");
  const auto* floor = find(e4, "s2_gauss_floor");
  o.need(floor && floor->pass && floor->max_residual > kEllipsoid4S2GaussFloor,
         "ellipsoid4 max|S2(G)| " + (floor ? sci(floor->max_residual) : std::string("missing")));
  o.note("sphere4 S2(G) " + sci(worst) + ", stdev|H| " + sci(stdev));
  if (floor) o.note("ellipsoid4 max|S2(G)| " + sci(floor->max_residual) + " > " + sci(kEllipsoid4S2GaussFloor));
  return o;
}

Outcome conservation_law() {
  Outcome o;
  double worst = 0.0;
  for (const auto& [label, r] : stress_runs())
    for (const char* c : {"div_S_immersion", "div_S_gauss"}) {
      need_upper(o, r, c, kDivSTol, label, worst);
      if (const auto* rec = find(r, c)) o.need(rec->points == 25, label + " " + c + " sampled < 25");
    }
  o.note("max " + sci(worst) + " <= " + sci(kDivSTol));
  return o;
}

Outcome reformulated_identity() {
  Outcome o;
  double worst = 0.0;
  for (const auto& [label, r] : stress_runs())
    for (const char* c : {"reform_identity_immersion", "reform_identity_gauss"})
      need_upper(o, r, c, kReformTol, label, worst);
  o.note("max " + sci(worst) + " <= " + sci(kReformTol));
  return o;
}

Outcome pipeline() {
  Outcome o;
  const auto s = sphere(2, 1);
  const auto grid = make_grid(s, default_grid_counts(s));
  const double area = integrate(s, FieldId::one, grid);
  const double gb = integrate(s, FieldId::gauss_curvature, grid);
  const double ra = std::abs(area - 4 * kPi) / (4 * kPi), rg = std::abs(gb - 4 * kPi) / (4 * kPi);
  o.need(ra <= kPipelineTol, "area rel " + sci(ra));
  o.need(rg <= kPipelineTol, "Gauss-Bonnet rel " + sci(rg));

  const auto dir = std::filesystem::temp_directory_path();
  const auto a = dir / ("gstress_acc_" + std::to_string(::getpid()) + "_a.json");
  const auto b = dir / ("gstress_acc_" + std::to_string(::getpid()) + "_b.json");
  const std::string args = "verify --suite geometry --immersion torus --params R=2,r=0.5 --seed 11 --out ";
  const int ca = cli(args + a.string()).code, cb = cli(args + b.string()).code;
  const auto sa = slurp(a), sb = slurp(b);
  o.need(ca == 0 && cb == 0, "verify exit codes " + std::to_string(ca) + "," + std::to_string(cb));
  o.need(!sa.empty() && sa == sb, "reports differ");
  std::filesystem::remove(a);
  std::filesystem::remove(b);

  const int fail = cli("verify --suite ruh_vilms --immersion torus --params R=2,r=0.5 --points 5 --tol ruh_vilms=1e-300").code;
  const int config = cli("verify --suite no_such_suite --immersion torus --params R=2,r=0.5").code;
  const int params = cli("verify --suite geometry --immersion torus --params R=2").code;
  o.need(fail == 1, "tolerance failure exit " + std::to_string(fail));
  o.need(config == 2, "unknown suite exit " + std::to_string(config));
  o.need(params == 2, "missing parameter exit " + std::to_string(params));
  o.note("area rel " + sci(ra) + ", Gauss-Bonnet rel " + sci(rg) + ", reports identical, exit codes 0/1/2");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"jet oracle vs finite differences", jet_oracle},
      {"canonical metric identity", canonical_metric_identity},
      {"Ruh-Vilms", ruh_vilms},
      {"trace identity and trace chain", trace_identity},
      {"theorem 1 integral scaling", theorem1_integrals},
      {"theorem 2 pseudo-umbilical dichotomy", theorem2},
      {"theorems 3 and 4 consistency", theorems3_and_4},
      {"conservation law", conservation_law},
      {"reformulated identity", reformulated_identity},
      {"pipeline sanity", pipeline},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.need(false, std::string("exception: ") + e.what());
    }
    if (!o.pass()) ++failures;
    std::cout << (o.pass() ? "PASS " : "FAIL ") << (k + 1) << " " << criteria[k].first << ": " << o.detail() << "  ["
              << sci(seconds_since(t0)) << " s]" << std::endl;
  }
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
