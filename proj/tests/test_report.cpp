#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gstress/report.hpp"
#include "gstress/suites.hpp"

using namespace gstress;
using nlohmann::ordered_json;

namespace {

SuiteConfig config(SuiteId suite, const std::string& name, const Params& params, int points = 20) {
  SuiteConfig c;
  c.suite = suite;
  c.immersion = name;
  c.spec = catalog_get(name, params);
  c.points = points;
  return c;
}

const CheckRecord* find(const VerificationReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::size_t count_lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

const Params kEllipsoid4 = {{"a1", 1}, {"a2", 1.1}, {"a3", 1.2}, {"a4", 1.3}, {"a5", 1.4}};

}  // namespace

TEST(Report, EmptyReportIsValidJson) {
  VerificationReport r;
  const auto text = emit_report(r, ReportFormat::json);
  const auto j = ordered_json::parse(text);
  EXPECT_TRUE(j["checks"].is_array());
  EXPECT_TRUE(j["checks"].empty());
  EXPECT_TRUE(r.pass());
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"version", "config", "checks", "integrals", "flags", "wall_time_ms", "seed"}));
  EXPECT_EQ(count_lines(emit_report(r, ReportFormat::csv)), 1u);
}

TEST(Report, RecordsSerialize) {
  VerificationReport r;
  r.seed = 99;
  r.checks.push_back({"a", "x = y", 1e-12, 1e-9, true, 10, Bound::upper});
  r.checks.push_back({"b, quoted \"c\"", "p", std::numeric_limits<double>::quiet_NaN(), 1e-9, false, 3, Bound::upper});
  r.integrals.push_back({"i", 1.0, 2.0, 0.5, {4, 8}});
  EXPECT_FALSE(r.pass());

  const auto j = report_json(r);
  EXPECT_EQ(j["checks"][0]["paper_anchor"], "x = y");
  EXPECT_EQ(j["checks"][0]["points"], 10);
  EXPECT_TRUE(j["checks"][1]["max_residual"].is_null());
  EXPECT_EQ(j["integrals"][0]["grid"], ordered_json({4, 8}));
  EXPECT_EQ(j["seed"], 99u);

  const auto csv = emit_report(r, ReportFormat::csv);
  EXPECT_EQ(count_lines(csv), r.checks.size() + 1);
  EXPECT_NE(csv.find("\"b, quoted \"\"c\"\"\""), std::string::npos);

  const auto text = emit_report(r, ReportFormat::text);
  EXPECT_NE(text.find("[PASS] a"), std::string::npos);
  EXPECT_NE(text.find("[FAIL] b"), std::string::npos);
  EXPECT_NE(text.find("FAIL (2 checks)"), std::string::npos);

  EXPECT_THROW(format_from_name("xml"), ConfigError);
}

TEST(Suites, NamesRoundTrip) {
  for (const auto& [id, name] : suite_names()) EXPECT_EQ(suite_from_name(name), id);
  EXPECT_THROW(suite_from_name("theorem5"), ConfigError);
  for (const auto& c : check_catalog()) {
    EXPECT_FALSE(c.anchor.empty());
    EXPECT_GT(c.tolerance, 0.0);
  }
}

TEST(Suites, AllExpandsByDimension) {
  const auto s2 = catalog_get("sphere", {{"m", 2}, {"r", 1}});
  const auto s4 = catalog_get("sphere", {{"m", 4}, {"r", 1}});
  EXPECT_EQ(expand_suite(SuiteId::all, s2).size(), 6u);
  const auto four = expand_suite(SuiteId::all, s4);
  EXPECT_EQ(four.size(), 7u);
  EXPECT_EQ(four.back(), SuiteId::theorem2);
  EXPECT_EQ(expand_suite(SuiteId::geometry, s4), std::vector<SuiteId>{SuiteId::geometry});
}

TEST(Suites, ValidationErrors) {
  auto c = config(SuiteId::geometry, "ellipsoid", {{"a", 2}, {"b", 1.5}, {"c", 1}});
  EXPECT_NO_THROW(validate(c));
  auto bad = c;
  bad.points = 0;
  EXPECT_THROW(run_suite(bad), ConfigError);
  bad = c;
  bad.order = 3;
  EXPECT_THROW(run_suite(bad), ConfigError);
  bad = c;
  bad.tolerances["no_such_check"] = 1.0;
  EXPECT_THROW(run_suite(bad), ConfigError);
  bad = c;
  bad.tolerances["ruh_vilms"] = -1.0;
  EXPECT_THROW(run_suite(bad), ConfigError);
  bad = c;
  bad.grid = {1, 2, 3};
  EXPECT_THROW(run_suite(bad), ConfigError);

  EXPECT_THROW(run_suite(config(SuiteId::theorem2, "ellipsoid", {{"a", 2}, {"b", 1.5}, {"c", 1}})), ConfigError);
  EXPECT_THROW(run_suite(config(SuiteId::theorem4_consistency, "product_spheres", {{"r", 1}, {"rho", 2}})),
               ConfigError);
}

TEST(Suites, FixedSeedIsByteStable) {
  const auto c = config(SuiteId::geometry, "torus", {{"R", 2}, {"r", 0.5}});
  const auto a = emit_report(run_suite(c), ReportFormat::json);
  const auto b = emit_report(run_suite(c), ReportFormat::json);
  EXPECT_EQ(a, b);
  auto d = c;
  d.seed = c.seed + 1;
  EXPECT_NE(a, emit_report(run_suite(d), ReportFormat::json));
  const auto j = ordered_json::parse(a);
  EXPECT_EQ(j["seed"], kDefaultSeed);
  EXPECT_EQ(j["config"]["seed"], kDefaultSeed);
  EXPECT_EQ(j["wall_time_ms"], 0.0);
}

TEST(Suites, TheoremTwoOnRoundFourSphere) {
  const auto r = run_suite(config(SuiteId::theorem2, "sphere", {{"m", 4}, {"r", 1}}, 50));
  ASSERT_TRUE(find(r, "pseudo_umbilical_residual"));
  ASSERT_TRUE(find(r, "s2_immersion_max"));
  EXPECT_LE(find(r, "pseudo_umbilical_residual")->max_residual, 1e-10);
  EXPECT_LE(find(r, "s2_immersion_max")->max_residual, 1e-9);
  EXPECT_TRUE(r.pass());
  EXPECT_TRUE(r.flags.pseudo_umbilical);
  EXPECT_FALSE(r.flags.minimal);
}

TEST(Suites, TheoremTwoOnProductOfSpheres) {
  const auto r = run_suite(config(SuiteId::theorem2, "product_spheres", {{"r", 1}, {"rho", 2}}, 50));
  const auto* floor = find(r, "s2_immersion_floor");
  ASSERT_TRUE(floor);
  EXPECT_EQ(floor->points, 50);
  EXPECT_GT(floor->max_residual, 0.05);
  EXPECT_TRUE(r.pass());
  EXPECT_FALSE(r.flags.pseudo_umbilical);
}

TEST(Suites, TheoremThreeAndFourOnRoundFourSphere) {
  const auto r3 = run_suite(config(SuiteId::theorem3_consistency, "sphere", {{"m", 4}, {"r", 1}}));
  EXPECT_TRUE(r3.pass());
  EXPECT_LE(find(r3, "mean_curvature_stdev")->max_residual, 1e-10);
  const auto r4 = run_suite(config(SuiteId::theorem4_consistency, "sphere", {{"m", 4}, {"r", 1}}));
  EXPECT_TRUE(r4.pass());
  EXPECT_TRUE(r4.flags.strictly_convex);
  EXPECT_TRUE(find(r4, "s2_gauss_max"));
  EXPECT_FALSE(find(r4, "s2_gauss_floor"));
}

TEST(Suites, TheoremFourOnEllipsoid4) {
  const auto r = run_suite(config(SuiteId::theorem4_consistency, "ellipsoid4", kEllipsoid4, 50));
  EXPECT_TRUE(r.pass());
  EXPECT_TRUE(r.flags.strictly_convex);
  const auto* floor = find(r, "s2_gauss_floor");
  ASSERT_TRUE(floor);
  EXPECT_GT(floor->max_residual, 1e-3);
  EXPECT_EQ(floor->bound, Bound::lower);
}

TEST(Suites, ChecksFailWhenTooManyPointsAreSingular) {
  SuiteConfig c;
  c.suite = SuiteId::geometry;
  c.spec = catalog_get("graph", {{"m", 2}}, "sqrt(u1 + 0.9)");
  c.points = 50;
  const auto r = run_suite(c);
  EXPECT_FALSE(r.pass());
  for (const auto& chk : r.checks) EXPECT_FALSE(chk.pass) << chk.name;
}

TEST(Suites, ToleranceOverridesAreApplied) {
  auto c = config(SuiteId::gauss_metric, "ellipsoid", {{"a", 2}, {"b", 1.5}, {"c", 1}});
  c.tolerances["canonical_metric"] = 1e-30;
  const auto r = run_suite(c);
  EXPECT_FALSE(r.pass());
  EXPECT_EQ(find(r, "canonical_metric")->tolerance, 1e-30);
  EXPECT_EQ(report_json(r)["config"]["tolerances"]["canonical_metric"], 1e-30);
}

TEST(Suites, PointwiseSuitesPassAcrossTheCatalog) {
  const std::vector<std::pair<std::string, Params>> cases = {
      {"plane", {}},
      {"sphere", {{"m", 2}, {"r", 1}}},
      {"ellipsoid", {{"a", 2}, {"b", 1.5}, {"c", 1}}},
      {"torus", {{"R", 2}, {"r", 0.7}}},
      {"catenoid", {{"c", 1}}},
      {"clifford_torus", {{"r", 1}}},
      {"sphere", {{"m", 3}, {"r", 1}}},
      {"sphere", {{"m", 4}, {"r", 1.5}}},
      {"ellipsoid4", kEllipsoid4},
      {"product_spheres", {{"r", 1}, {"rho", 2}}},
  };
  for (const auto& [name, params] : cases)
    for (SuiteId s : {SuiteId::jets_fd, SuiteId::geometry, SuiteId::gauss_metric, SuiteId::ruh_vilms,
                      SuiteId::stress_identities}) {
      const auto r = run_suite(config(s, name, params));
      EXPECT_TRUE(r.pass()) << name << " " << suite_name(s) << "\n" << emit_report(r, ReportFormat::text);
    }
}
