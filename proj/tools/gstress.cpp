// gstress: command-line front end.
//
//   gstress list
//   gstress inspect   --immersion <name|path> [--params k=v,...] --at u1=..,u2=.. [--json] [--dump-jets]
//   gstress verify    --suite <id> --immersion <name|path> [--params ...] [--points N] [--grid N[,N...]]
//                     [--order 4] [--tol name=val,...] [--seed S] [--out file] [--format json|csv|text]
//   gstress integrate --immersion <...> --functional <field-id> [--grid ...]
//
// Exit status: 0 pass, 1 failed check, 2 configuration error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "gstress/gaussmap.hpp"
#include "gstress/immersion.hpp"
#include "gstress/quadrature.hpp"
#include "gstress/report.hpp"
#include "gstress/shape.hpp"
#include "gstress/stress_energy.hpp"
#include "gstress/suites.hpp"

namespace {

using gstress::ConfigError;
using json = nlohmann::ordered_json;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

double parse_real(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + s + "' in " + what);
  }
  if (used != s.size()) throw ConfigError("bad number '" + s + "' in " + what);
  return v;
}

std::map<std::string, double> parse_assignments(const std::string& text, const std::string& what) {
  std::map<std::string, double> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError(what + " expects name=value pairs, got '" + item + "'");
    const std::string key = trim(item.substr(0, eq));
    if (key.empty()) throw ConfigError("empty name in " + what);
    out[key] = parse_real(trim(item.substr(eq + 1)), what);
  }
  return out;
}

std::vector<int> parse_grid(const std::string& text) {
  std::vector<int> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ',')) {
    const double v = parse_real(trim(item), "--grid");
    if (v != static_cast<int>(v) || v < 1) throw ConfigError("grid node counts must be positive integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

gstress::ChartPoint parse_point(const std::string& text, int m) {
  const auto values = parse_assignments(text, "--at");
  gstress::ChartPoint u(m);
  std::vector<bool> seen(m, false);
  for (const auto& [k, v] : values) {
    if (k.size() != 2 || k[0] != 'u' || k[1] < '1' || k[1] > '0' + m)
      throw ConfigError("--at expects u1..u" + std::to_string(m) + ", got '" + k + "'");
    u[k[1] - '1'] = v;
    seen[k[1] - '1'] = true;
  }
  for (int i = 0; i < m; ++i)
    if (!seen[i]) throw ConfigError("--at is missing u" + std::to_string(i + 1));
  return u;
}

struct ImmersionOptions {
  std::string source;
  std::string params;
  std::string graph_expression;

  void attach(CLI::App* cmd) {
    cmd->add_option("--immersion", source, "catalog name or definition file")->required();
    cmd->add_option("--params", params, "catalog parameters k=v,...");
    cmd->add_option("--graph-expr", graph_expression, "height function for the graph immersion");
  }

  gstress::ImmersionSpec resolve() const {
    return gstress::resolve_immersion({source, parse_assignments(params, "--params"), graph_expression});
  }
};

json matrix_json(const Eigen::MatrixXd& a) {
  json rows = json::array();
  for (int i = 0; i < a.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < a.cols(); ++j) r.push_back(a(i, j));
    rows.push_back(r);
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json r = json::array();
  for (int i = 0; i < v.size(); ++i) r.push_back(v[i]);
  return r;
}

// ---------------------------------------------------------------------------

int cmd_list() {
  std::cout << "immersions:\n";
  for (const auto& e : gstress::catalog_entries()) {
    std::string params;
    for (const auto& p : e.params) params += (params.empty() ? "" : ",") + p;
    std::cout << "  " << e.name << (params.empty() ? "" : "(" + params + ")") << "  " << e.summary << '\n';
  }
  std::cout << "suites:\n";
  for (const auto& [id, name] : gstress::suite_names()) std::cout << "  " << name << '\n';
  std::cout << "fields:\n";
  for (const auto& [id, name] : gstress::field_names()) std::cout << "  " << name << '\n';
  return kExitPass;
}

int cmd_inspect(const ImmersionOptions& imm, const std::string& at, bool as_json, bool dump_jets, int order) {
  const auto spec = imm.resolve();
  const auto u = parse_point(at, spec.m);
  const auto geom = gstress::point_geometry(spec, u, order);
  const int m = geom.m;

  json j;
  j["immersion"] = spec.name;
  j["m"] = m;
  j["n"] = geom.n;
  j["point"] = u;
  j["phi"] = vector_json(gstress::values(geom.jets->phi));
  j["metric"] = matrix_json(geom.g);
  j["metric_inverse"] = matrix_json(geom.g_inv);
  json gam = json::array();
  for (int k = 0; k < m; ++k) {
    Eigen::MatrixXd G(m, m);
    for (int i = 0; i < m; ++i)
      for (int l = 0; l < m; ++l) G(i, l) = geom.Gamma(k, i, l);
    gam.push_back(matrix_json(G));
  }
  j["christoffel"] = gam;
  json B = json::array();
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < m; ++l) B.push_back(vector_json(geom.b(i, l)));
  j["second_fundamental_form"] = B;
  j["mean_curvature"] = vector_json(geom.H);
  j["mean_curvature_norm"] = geom.H.norm();
  j["volume_density"] = geom.vol_density;
  j["tangent_frame"] = matrix_json(geom.tangent_frame);
  j["normal_frame"] = matrix_json(geom.normal_frame);
  j["normal_orientation"] = geom.normal_orientation;
  const auto pu = gstress::pseudo_umbilical_residual(geom);
  j["pseudo_umbilical_residual"] = pu.residual;
  j["minimal"] = pu.minimal;
  if (geom.n == m + 1) {
    j["principal_curvatures"] = vector_json(gstress::principal_curvatures(geom));
    j["signed_mean_curvature"] = gstress::signed_mean_curvature(geom);
  }
  const auto G = gstress::gauss_plucker(*geom.jets);
  j["plucker"] = vector_json(G.value());
  const auto fi = gstress::immersion_fields(geom, false);
  const auto fg = gstress::gauss_map_fields(geom);
  j["gauss_tension"] = matrix_json(fg.tau.entries);
  j["gauss_tension_norm"] = fg.tau.norm();
  j["stress_energy_immersion"] = matrix_json(gstress::harmonic_S(fi).value);
  j["biharmonic_stress_immersion"] = matrix_json(gstress::biharmonic_S2(fi).value);
  j["stress_energy_gauss"] = matrix_json(gstress::harmonic_S(fg).value);
  j["biharmonic_stress_gauss"] = matrix_json(gstress::biharmonic_S2(fg).value);
  j["bitension_immersion"] = vector_json(gstress::bitension_flat(geom));
  if (dump_jets) {
    const auto jets = gstress::eval_immersion(spec, u, order);
    const auto* table = gstress::monomial_table(m, order);
    json mono = json::array();
    for (std::size_t k = 0; k < jets[0].coeffs().size(); ++k)
      mono.push_back(std::vector<int>(table->exponents[k].begin(), table->exponents[k].begin() + m));
    j["jet_monomials"] = mono;
    json coeffs = json::array();
    for (const auto& x : jets) {
      json c = json::array();
      for (auto v : x.coeffs()) c.push_back(static_cast<double>(v));
      coeffs.push_back(c);
    }
    j["jets"] = coeffs;
  }
  if (as_json) {
    std::cout << j.dump(2) << '\n';
  } else {
    for (const auto& [key, value] : j.items()) std::cout << key << ": " << value.dump() << '\n';
  }
  return kExitPass;
}

int cmd_verify(const ImmersionOptions& imm, const std::string& suite, int points, const std::string& grid,
               int order, const std::string& tol, std::uint64_t seed, const std::string& out,
               const std::string& format, bool timing) {
  gstress::SuiteConfig cfg;
  cfg.suite = gstress::suite_from_name(suite);
  cfg.immersion = imm.source;
  cfg.spec = imm.resolve();
  cfg.points = points;
  cfg.grid = parse_grid(grid);
  cfg.order = order;
  cfg.tolerances = parse_assignments(tol, "--tol");
  cfg.seed = seed;
  cfg.timing = timing;
  const auto fmt = gstress::format_from_name(format);
  const auto report = gstress::run_suite(cfg);
  const std::string text = gstress::emit_report(report, fmt);
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + out + "'");
    f << text;
  }
  return report.pass() ? kExitPass : kExitFail;
}

int cmd_integrate(const ImmersionOptions& imm, const std::string& functional, const std::string& grid,
                  const std::string& format) {
  const auto spec = imm.resolve();
  const auto field = gstress::field_from_name(functional);
  const auto counts = gstress::resolve_grid_counts(spec, parse_grid(grid));
  const auto quad = gstress::make_grid(spec, counts);
  const auto fmt = gstress::format_from_name(format);
  const double value = gstress::integrate(spec, field, quad);
  const auto ev = gstress::excluded_volume(spec, counts);
  if (fmt == gstress::ReportFormat::json) {
    json j;
    j["version"] = gstress::kVersion;
    j["immersion"] = imm.source;
    j["functional"] = functional;
    j["value"] = value;
    j["grid"] = counts;
    j["nodes"] = quad.size();
    j["volume"] = ev.margined;
    j["excluded_cap_volume"] = ev.excluded();
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << functional << " = " << gstress::format_real(value) << "  (grid";
    for (int c : counts) std::cout << ' ' << c;
    std::cout << ", excluded cap volume " << gstress::format_real(ev.excluded()) << ")\n";
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gauss map and biharmonic stress-energy verification engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gstress::kVersion);

  auto* list = app.add_subcommand("list", "catalog immersions, suites and field ids");

  ImmersionOptions inspect_imm;
  std::string at;
  bool as_json = false, dump_jets = false;
  int inspect_order = gstress::kDefaultJetOrder;
  auto* inspect = app.add_subcommand("inspect", "geometry at one chart point");
  inspect_imm.attach(inspect);
  inspect->add_option("--at", at, "chart point u1=..,u2=..")->required();
  inspect->add_flag("--json", as_json, "JSON output");
  inspect->add_flag("--dump-jets", dump_jets, "include immersion jet coefficients (graded-lex order)");
  inspect->add_option("--order", inspect_order, "jet order")->check(CLI::Range(4, gstress::kMaxJetOrder));

  ImmersionOptions verify_imm;
  std::string suite, grid, tol, out, format = "json";
  int points = 50, order = gstress::kDefaultJetOrder;
  std::uint64_t seed = gstress::kDefaultSeed;
  bool timing = false;
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("--suite", suite, "suite id")->required();
  verify_imm.attach(verify);
  verify->add_option("--points", points, "random chart points");
  verify->add_option("--grid", grid, "quadrature nodes N or N1,...,Nm");
  verify->add_option("--order", order, "jet order");
  verify->add_option("--tol", tol, "tolerance overrides name=val,...");
  verify->add_option("--seed", seed, "64-bit seed for random points");
  verify->add_option("--out", out, "write the report to a file");
  verify->add_option("--format", format, "json, csv or text");
  verify->add_flag("--timing", timing, "record wall time in the report");

  ImmersionOptions integrate_imm;
  std::string functional, integrate_grid, integrate_format = "text";
  auto* integrate = app.add_subcommand("integrate", "integrate a scalar field over the chart");
  integrate_imm.attach(integrate);
  integrate->add_option("--functional", functional, "field id")->required();
  integrate->add_option("--grid", integrate_grid, "quadrature nodes N or N1,...,Nm");
  integrate->add_option("--format", integrate_format, "json or text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*list) return cmd_list();
    if (*inspect) return cmd_inspect(inspect_imm, at, as_json, dump_jets, inspect_order);
    if (*verify)
      return cmd_verify(verify_imm, suite, points, grid, order, tol, seed, out, format, timing);
    if (*integrate) {
      if (integrate_format == "csv") throw ConfigError("integrate writes json or text");
      return cmd_integrate(integrate_imm, functional, integrate_grid, integrate_format);
    }
  } catch (const gstress::Error& e) {
    std::cerr << "gstress: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
