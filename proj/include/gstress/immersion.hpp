#pragma once

// Immersions phi: U subset R^m -> R^n given by one expression per ambient
// coordinate over a single rectangular chart.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gstress/errors.hpp"
#include "gstress/expr.hpp"
#include "gstress/jet.hpp"

namespace gstress {

inline constexpr double kDefaultChartMargin = 1e-2;
inline constexpr double kRankTolerance = 1e-8;

struct ChartInterval {
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;
};

using ChartPoint = std::vector<double>;

/// Immutable once built by make_immersion (which validates every invariant).
struct ImmersionSpec {
  std::string name;
  int m = 0;
  int n = 0;
  std::vector<ExprPtr> components;
  Params params;
  std::vector<ChartInterval> chart;
  double margin = kDefaultChartMargin;

  /// The usable interval of direction i: periodic directions are whole,
  /// the others lose `margin` at both ends.
  ChartInterval effective(int i) const {
    const auto& c = chart[i];
    if (c.periodic) return c;
    return {c.lo + margin, c.hi - margin, false};
  }

  bool contains(std::span<const double> u) const {
    if (static_cast<int>(u.size()) != m) return false;
    for (int i = 0; i < m; ++i) {
      if (!std::isfinite(u[i])) return false;
      if (chart[i].periodic) continue;
      const auto e = effective(i);
      if (u[i] < e.lo || u[i] > e.hi) return false;
    }
    return true;
  }
};

inline ImmersionSpec make_immersion(std::string name, int m, int n, std::vector<ExprPtr> components,
                                    Params params, std::vector<ChartInterval> chart,
                                    double margin) {
  if (m < 1 || m > kMaxJetVars) throw ChartError("intrinsic dimension m must be in 1..4");
  if (n <= m || n > 8) throw ChartError("ambient dimension n must satisfy m < n <= 8");
  if (static_cast<int>(components.size()) != n)
    throw ChartError("expected " + std::to_string(n) + " component expressions, got " +
                     std::to_string(components.size()));
  if (static_cast<int>(chart.size()) != m)
    throw ChartError("expected " + std::to_string(m) + " chart intervals");
  if (!(margin >= 0.0)) throw ChartError("chart margin must be non-negative");
  for (std::size_t j = 0; j < components.size(); ++j) {
    if (!components[j]) throw ChartError("missing component x" + std::to_string(j + 1));
    if (max_variable(*components[j]) > m)
      throw ChartError("component x" + std::to_string(j + 1) + " uses a variable beyond u" +
                       std::to_string(m));
    std::set<std::string> used;
    collect_parameters(*components[j], used);
    for (const auto& p : used)
      if (p != "pi" && !params.contains(p)) throw ChartError("unbound parameter '" + p + "'");
  }
  ImmersionSpec s{std::move(name), m, n, std::move(components), std::move(params),
                  std::move(chart), margin};
  for (int i = 0; i < m; ++i) {
    const auto& c = s.chart[i];
    if (!(c.lo < c.hi)) throw ChartError("empty chart interval for u" + std::to_string(i + 1));
    const auto e = s.effective(i);
    if (!(e.lo < e.hi))
      throw ChartError("chart interval for u" + std::to_string(i + 1) + " is empty after margin");
  }
  return s;
}

/// Order-`order` jets of every ambient coordinate at `u`.
inline std::vector<Jet> eval_immersion(const ImmersionSpec& spec, std::span<const double> u,
                                       int order = kDefaultJetOrder) {
  if (!spec.contains(u)) {
    std::string where;
    for (double x : u) where += (where.empty() ? "" : ", ") + format_real(x);
    throw ChartError("point (" + where + ") is outside the chart of " + spec.name);
  }
  std::vector<Jet> vars;
  vars.reserve(spec.m);
  for (int i = 0; i < spec.m; ++i) vars.push_back(Jet::variable(i, u[i], spec.m, order));
  std::vector<Jet> out;
  out.reserve(spec.n);
  for (const auto& c : spec.components) out.push_back(evaluate(*c, vars, spec.params));
  return out;
}

/// Direct real-valued evaluation of phi(u), no jets involved.
inline std::vector<double> eval_point(const ImmersionSpec& spec, std::span<const double> u) {
  std::vector<double> x;
  x.reserve(spec.n);
  for (const auto& c : spec.components) x.push_back(evaluate(*c, u, spec.params));
  return x;
}

/// Singular values of the Jacobian at u, descending.
inline Eigen::VectorXd jacobian_singular_values(const ImmersionSpec& spec,
                                                std::span<const double> u) {
  const auto jets = eval_immersion(spec, u, 1);
  Eigen::MatrixXd J(spec.n, spec.m);
  for (int a = 0; a < spec.n; ++a)
    for (int i = 0; i < spec.m; ++i) J(a, i) = static_cast<double>(jets[a].coeffs()[1 + i]);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(J).singularValues();
}

/// Uniform points in the margined chart. The generator is a 64-bit Mersenne
/// twister mapped to doubles by hand so the stream is identical on every
/// standard library.
inline std::vector<ChartPoint> sample_chart_points(const ImmersionSpec& spec, int count,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ChartPoint> pts(count, ChartPoint(spec.m));
  for (auto& p : pts) {
    for (int i = 0; i < spec.m; ++i) {
      const auto e = spec.effective(i);
      const double t = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      p[i] = e.lo + (e.hi - e.lo) * t;
    }
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Definition files

/// Parse the line-oriented immersion format:
///   m = <int> / n = <int> / margin = <real>
///   param <name> = <real>
///   chart u<i> = <lo> <hi> [periodic]
///   x<j> = <expression>
/// '#' starts a comment.
inline ImmersionSpec parse_immersion_file(std::string_view text, std::string source = "<text>") {
  struct Pending {
    std::string text;
    int line;
    int column;
  };
  int m = -1, n = -1;
  double margin = kDefaultChartMargin;
  Params params;
  std::map<int, ChartInterval> chart;
  std::map<int, Pending> comps;

  auto constant_expr = [&](const std::string& s, int line, int col) {
    std::set<std::string> known;
    for (auto& [k, v] : params) known.insert(k);
    auto e = parse_expression(s, &known, line, col);
    if (max_variable(*e) > 0) throw ParseError("constant expected, found a variable", line, col + 1);
    return evaluate(*e, std::span<const double>{}, params);
  };
  auto parse_int = [](const std::string& s, int line, int col) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("expected an integer", line, col + 1);
    return v;
  };
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return std::string_view{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };

  std::size_t start = 0;
  int line_no = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto body = trim(raw);
    if (body.empty()) continue;
    const int body_col = static_cast<int>(body.data() - raw.data());
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected '='", line_no, body_col + 1);
    const std::string key(trim(body.substr(0, eq)));
    const std::string_view rhs_raw = body.substr(eq + 1);
    const std::string rhs(trim(rhs_raw));
    const int rhs_col = body_col + static_cast<int>(eq + 1) +
                        static_cast<int>(rhs_raw.find_first_not_of(" \t"));
    if (rhs.empty()) throw ParseError("missing value after '='", line_no, body_col + static_cast<int>(eq) + 2);

    if (key == "m") {
      m = parse_int(rhs, line_no, rhs_col);
    } else if (key == "n") {
      n = parse_int(rhs, line_no, rhs_col);
    } else if (key == "margin") {
      margin = constant_expr(rhs, line_no, rhs_col);
    } else if (key.rfind("param", 0) == 0 && key.size() > 5 && (key[5] == ' ' || key[5] == '\t')) {
      const std::string name(trim(std::string_view(key).substr(5)));
      if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_'))
        throw ParseError("bad parameter name", line_no, body_col + 7);
      if (name == "pi" || function_from_name(name) ||
          (name.size() == 2 && name[0] == 'u' && name[1] >= '1' && name[1] <= '4'))
        throw ParseError("reserved parameter name '" + name + "'", line_no, body_col + 7);
      params[name] = constant_expr(rhs, line_no, rhs_col);
    } else if (key.rfind("chart", 0) == 0) {
      const std::string var(trim(std::string_view(key).substr(5)));
      if (var.size() != 2 || var[0] != 'u' || var[1] < '1' || var[1] > '4')
        throw ParseError("chart expects u1..u4", line_no, body_col + 1);
      std::istringstream words(rhs);
      std::string lo, hi, flag, extra;
      words >> lo >> hi >> flag >> extra;
      if (hi.empty()) throw ParseError("chart needs <lo> <hi>", line_no, rhs_col + 1);
      if (!flag.empty() && flag != "periodic")
        throw ParseError("unknown chart flag '" + flag + "'", line_no, rhs_col + 1);
      if (!extra.empty()) throw ParseError("trailing text after chart flag", line_no, rhs_col + 1);
      chart[var[1] - '1'] = {constant_expr(lo, line_no, rhs_col),
                             constant_expr(hi, line_no, rhs_col), flag == "periodic"};
    } else if (key.size() >= 2 && key[0] == 'x' &&
               std::all_of(key.begin() + 1, key.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      const int j = parse_int(key.substr(1), line_no, body_col + 1);
      if (j < 1 || j > 8) throw ParseError("component index out of range", line_no, body_col + 1);
      comps[j - 1] = {rhs, line_no, rhs_col};
    } else {
      throw ParseError("unknown key '" + key + "'", line_no, body_col + 1);
    }
  }
  if (m < 0) throw ChartError(source + ": missing 'm = <int>'");
  if (n < 0) throw ChartError(source + ": missing 'n = <int>'");
  if (m < 1 || m > kMaxJetVars) throw ChartError(source + ": m must be in 1..4");

  std::set<std::string> known;
  for (auto& [k, v] : params) known.insert(k);
  std::vector<ExprPtr> components(n);
  for (auto& [j, p] : comps) {
    if (j >= n) throw ParseError("component x" + std::to_string(j + 1) + " exceeds n", p.line, 1);
    components[j] = parse_expression(p.text, &known, p.line, p.column);
  }
  std::vector<ChartInterval> ch(m);
  for (int i = 0; i < m; ++i) {
    auto it = chart.find(i);
    if (it == chart.end()) throw ChartError(source + ": missing chart for u" + std::to_string(i + 1));
    ch[i] = it->second;
  }
  for (auto& [i, c] : chart)
    if (i >= m) throw ChartError(source + ": chart for u" + std::to_string(i + 1) + " exceeds m");
  return make_immersion(std::move(source), m, n, std::move(components), std::move(params),
                        std::move(ch), margin);
}

inline ImmersionSpec load_immersion_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open immersion file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_immersion_file(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Catalog

struct CatalogEntry {
  std::string name;
  std::vector<std::string> params;
  std::string summary;
};

inline const std::vector<CatalogEntry>& catalog_entries() {
  static const std::vector<CatalogEntry> entries = {
      {"plane", {}, "unit square of the plane in R^3"},
      {"sphere", {"m", "r"}, "round sphere S^m(r) in R^(m+1), m in {2,3,4}, polar chart"},
      {"ellipsoid", {"a", "b", "c"}, "ellipsoid with semi-axes a, b, c in R^3"},
      {"ellipsoid4", {"a1", "a2", "a3", "a4", "a5"}, "4-dimensional ellipsoid in R^5"},
      {"torus", {"R", "r"}, "torus of revolution in R^3, R > r"},
      {"clifford_torus", {"r"}, "flat torus S^1(r) x S^1(r) in R^4"},
      {"catenoid", {"c"}, "catenoid with neck radius c in R^3, u1 in [-1, 1]"},
      {"product_spheres", {"r", "rho"}, "S^2(r) x S^2(rho) in R^6"},
      {"graph", {"m"}, "graph of a user expression f(u1..um) over [-1, 1]^m in R^(m+1)"},
  };
  return entries;
}

namespace detail {

inline ImmersionSpec from_strings(std::string name, int m, const std::vector<std::string>& xs,
                                  Params params, std::vector<ChartInterval> chart, double margin) {
  std::set<std::string> known;
  for (auto& [k, v] : params) known.insert(k);
  std::vector<ExprPtr> comps;
  for (const auto& x : xs) comps.push_back(parse_expression(x, &known));
  const int n = static_cast<int>(xs.size());
  return make_immersion(std::move(name), m, n, std::move(comps), std::move(params), std::move(chart),
                        margin);
}

/// Nested polar coordinates: x1 = a1 cos u1, x2 = a2 sin u1 cos u2, ...,
/// x_{m+1} = a_{m+1} sin u1 ... sin um; u1..u(m-1) polar, um azimuthal.
inline std::vector<std::string> nested_polar(int m, const std::vector<std::string>& scale) {
  std::vector<std::string> xs;
  std::string sines;
  for (int k = 0; k <= m; ++k) {
    std::string x = scale[k] + sines;
    if (k < m) x += "*cos(u" + std::to_string(k + 1) + ")";
    xs.push_back(x);
    if (k < m) sines += "*sin(u" + std::to_string(k + 1) + ")";
  }
  return xs;
}

inline std::vector<ChartInterval> polar_chart(int m) {
  std::vector<ChartInterval> c(m, {0.0, std::numbers::pi, false});
  c[m - 1] = {0.0, 2.0 * std::numbers::pi, true};
  return c;
}

}  // namespace detail

/// Fully bound catalog immersion. `graph_expression` is the height function for "graph".
inline ImmersionSpec catalog_get(const std::string& name, const Params& params,
                                 const std::string& graph_expression = {}) {
  const auto& entries = catalog_entries();
  auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.name == name; });
  if (it == entries.end()) throw ChartError("unknown catalog immersion '" + name + "'");
  if (name != "graph") {
    for (auto& [k, v] : params)
      if (std::find(it->params.begin(), it->params.end(), k) == it->params.end())
        throw ChartError(name + " has no parameter '" + k + "'");
  }
  auto get = [&](const std::string& p) {
    auto f = params.find(p);
    if (f == params.end()) throw ChartError(name + " requires parameter '" + p + "'");
    return f->second;
  };
  auto positive = [&](const std::string& p) {
    const double v = get(p);
    if (!(v > 0.0)) throw ChartError(name + ": parameter '" + p + "' must be positive");
    return v;
  };
  auto dimension = [&](int lo, int hi) {
    const double v = get("m");
    if (v != std::floor(v) || v < lo || v > hi)
      throw ChartError(name + ": m must be an integer in " + std::to_string(lo) + ".." +
                       std::to_string(hi));
    return static_cast<int>(v);
  };
  constexpr double two_pi = 2.0 * std::numbers::pi;

  if (name == "plane")
    return detail::from_strings(name, 2, {"u1", "u2", "0"}, {}, {{0, 1, false}, {0, 1, false}}, 0.0);
  if (name == "sphere") {
    const int m = dimension(2, 4);
    const double r = positive("r");
    std::vector<std::string> xs;
    if (m == 2)
      xs = {"r*sin(u1)*cos(u2)", "r*sin(u1)*sin(u2)", "r*cos(u1)"};
    else
      xs = detail::nested_polar(m, std::vector<std::string>(m + 1, "r"));
    return detail::from_strings(name, m, xs, {{"r", r}}, detail::polar_chart(m), kDefaultChartMargin);
  }
  if (name == "ellipsoid") {
    Params p{{"a", positive("a")}, {"b", positive("b")}, {"c", positive("c")}};
    return detail::from_strings(name, 2, {"a*sin(u1)*cos(u2)", "b*sin(u1)*sin(u2)", "c*cos(u1)"},
                                std::move(p), detail::polar_chart(2), kDefaultChartMargin);
  }
  if (name == "ellipsoid4") {
    Params p;
    std::vector<std::string> scale;
    for (int k = 1; k <= 5; ++k) {
      const std::string a = "a" + std::to_string(k);
      p[a] = positive(a);
      scale.push_back(a);
    }
    return detail::from_strings(name, 4, detail::nested_polar(4, scale), std::move(p),
                                detail::polar_chart(4), kDefaultChartMargin);
  }
  if (name == "torus") {
    const double R = positive("R"), r = positive("r");
    if (!(R > r)) throw ChartError("torus: requires R > r");
    return detail::from_strings(
        name, 2, {"(R + r*cos(u2))*cos(u1)", "(R + r*cos(u2))*sin(u1)", "r*sin(u2)"},
        {{"R", R}, {"r", r}}, {{0, two_pi, true}, {0, two_pi, true}}, 0.0);
  }
  if (name == "clifford_torus") {
    const double r = positive("r");
    return detail::from_strings(name, 2, {"r*cos(u1)", "r*sin(u1)", "r*cos(u2)", "r*sin(u2)"},
                                {{"r", r}}, {{0, two_pi, true}, {0, two_pi, true}}, 0.0);
  }
  if (name == "catenoid") {
    const double c = positive("c");
    return detail::from_strings(name, 2, {"c*cosh(u1/c)*cos(u2)", "c*cosh(u1/c)*sin(u2)", "u1"},
                                {{"c", c}}, {{-1, 1, false}, {0, two_pi, true}}, 0.0);
  }
  if (name == "product_spheres") {
    const double r = positive("r"), rho = positive("rho");
    return detail::from_strings(name, 4,
                                {"r*sin(u1)*cos(u2)", "r*sin(u1)*sin(u2)", "r*cos(u1)",
                                 "rho*sin(u3)*cos(u4)", "rho*sin(u3)*sin(u4)", "rho*cos(u3)"},
                                {{"r", r}, {"rho", rho}},
                                {{0, std::numbers::pi, false}, {0, two_pi, true},
                                 {0, std::numbers::pi, false}, {0, two_pi, true}},
                                kDefaultChartMargin);
  }
  // graph
  const int m = dimension(1, 3);
  if (graph_expression.empty()) throw ChartError("graph requires a height expression");
  Params p = params;
  p.erase("m");
  std::vector<std::string> xs;
  for (int i = 1; i <= m; ++i) xs.push_back("u" + std::to_string(i));
  xs.push_back(graph_expression);
  return detail::from_strings(name, m, xs, std::move(p),
                              std::vector<ChartInterval>(m, {-1.0, 1.0, false}), 0.0);
}

}  // namespace gstress
