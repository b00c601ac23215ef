#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gstress/errors.hpp"
#include "gstress/expr.hpp"

namespace gstress {

inline constexpr const char* kVersion = "1.0.0";

/// Upper checks pass when max_residual <= tolerance. Lower checks store the
/// smallest observed value in max_residual and pass when it is >= tolerance.
enum class Bound { upper, lower };

struct CheckRecord {
  std::string name;
  std::string anchor;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  int points = 0;
  Bound bound = Bound::upper;
};

struct IntegralRecord {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_diff = 0.0;
  std::vector<int> grid;
};

struct ReportFlags {
  bool strictly_convex = false;
  bool pseudo_umbilical = false;
  bool minimal = false;
};

struct VerificationReport {
  std::string version = kVersion;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<CheckRecord> checks;
  std::vector<IntegralRecord> integrals;
  ReportFlags flags;
  double wall_time_ms = 0.0;
  std::uint64_t seed = 0;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

enum class ReportFormat { json, csv, text };

inline ReportFormat format_from_name(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "text") return ReportFormat::text;
  throw ConfigError("unknown report format '" + s + "' (json, csv, text)");
}

namespace detail {

inline nlohmann::ordered_json real_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace detail

inline nlohmann::ordered_json report_json(const VerificationReport& r) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["version"] = r.version;
  j["config"] = r.config;
  j["checks"] = ordered_json::array();
  for (const auto& c : r.checks)
    j["checks"].push_back({{"name", c.name},
                           {"paper_anchor", c.anchor},
                           {"max_residual", detail::real_or_null(c.max_residual)},
                           {"tolerance", c.tolerance},
                           {"pass", c.pass},
                           {"points", c.points}});
  j["integrals"] = ordered_json::array();
  for (const auto& i : r.integrals)
    j["integrals"].push_back({{"name", i.name},
                              {"lhs", detail::real_or_null(i.lhs)},
                              {"rhs", detail::real_or_null(i.rhs)},
                              {"rel_diff", detail::real_or_null(i.rel_diff)},
                              {"grid", i.grid}});
  j["flags"] = {{"strictly_convex", r.flags.strictly_convex},
                {"pseudo_umbilical", r.flags.pseudo_umbilical},
                {"minimal", r.flags.minimal}};
  j["wall_time_ms"] = r.wall_time_ms;
  j["seed"] = r.seed;
  return j;
}

inline std::string emit_report(const VerificationReport& r, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::json: out << report_json(r).dump(2) << '\n'; break;
    case ReportFormat::csv:
      out << "name,paper_anchor,max_residual,tolerance,pass,points\n";
      for (const auto& c : r.checks)
        out << detail::csv_field(c.name) << ',' << detail::csv_field(c.anchor) << ','
            << format_real(c.max_residual) << ',' << format_real(c.tolerance) << ','
            << (c.pass ? "true" : "false") << ',' << c.points << '\n';
      break;
    case ReportFormat::text: {
      out << "gstress " << r.version;
      if (r.config.contains("suite")) out << "  suite " << r.config["suite"].get<std::string>();
      if (r.config.contains("immersion")) out << "  immersion " << r.config["immersion"].get<std::string>();
      out << "  seed " << r.seed << '\n';
      for (const auto& c : r.checks)
        out << (c.pass ? "  [PASS] " : "  [FAIL] ") << c.name << "  " << detail::sci(c.max_residual)
            << (c.bound == Bound::upper ? " <= " : " >= ") << detail::sci(c.tolerance) << "  (" << c.points
            << " points)  " << c.anchor << '\n';
      for (const auto& i : r.integrals)
        out << "  integral " << i.name << "  lhs " << detail::sci(i.lhs) << "  rhs " << detail::sci(i.rhs)
            << "  rel " << detail::sci(i.rel_diff) << '\n';
      out << "  flags: strictly_convex=" << r.flags.strictly_convex
          << " pseudo_umbilical=" << r.flags.pseudo_umbilical << " minimal=" << r.flags.minimal << '\n';
      out << (r.pass() ? "PASS" : "FAIL") << " (" << r.checks.size() << " checks)\n";
      break;
    }
  }
  return out.str();
}

}  // namespace gstress
