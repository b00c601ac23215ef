#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <json.hpp>

using nlohmann::ordered_json;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(GSTRESS_BIN) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string sample(const std::string& name) { return std::string(GSTRESS_SAMPLES) + "/" + name; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("gstress_cli_" + std::to_string(::getpid()) + "_" + name);
}

const std::string kEllipsoid = "--immersion ellipsoid --params a=2,b=1.5,c=1";

}  // namespace

TEST(Cli, ListShowsCatalogSuitesAndFields) {
  const auto r = run("list");
  EXPECT_EQ(r.code, 0);
  for (const char* s : {"sphere(m,r)", "ellipsoid4", "product_spheres", "graph", "theorem2", "theorem4_consistency",
                        "trace_S2", "gauss_curvature"})
    EXPECT_NE(r.out.find(s), std::string::npos) << s;
}

TEST(Cli, InspectJson) {
  const auto r = run("inspect --immersion sphere --params m=2,r=2 --at u1=0.7,u2=1.1 --json");
  ASSERT_EQ(r.code, 0);
  const auto j = ordered_json::parse(r.out);
  EXPECT_EQ(j["m"], 2);
  EXPECT_EQ(j["n"], 3);
  EXPECT_NEAR(j["mean_curvature_norm"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(j["metric"][0][0].get<double>(), 4.0, 1e-12);
  EXPECT_FALSE(j.contains("jets"));
}

TEST(Cli, InspectDumpJets) {
  const auto r = run("inspect " + kEllipsoid + " --at u1=0.9,u2=0.3 --json --dump-jets");
  ASSERT_EQ(r.code, 0);
  const auto j = ordered_json::parse(r.out);
  ASSERT_EQ(j["jets"].size(), 3u);
  EXPECT_EQ(j["jets"][0].size(), 15u);
  EXPECT_EQ(j["jet_monomials"].size(), 15u);
  EXPECT_EQ(j["jet_monomials"][1], ordered_json({1, 0}));
  EXPECT_NEAR(j["jets"][0][0].get<double>(), 2 * std::sin(0.9) * std::cos(0.3), 1e-13);
  EXPECT_NEAR(j["jets"][2][0].get<double>(), std::cos(0.9), 1e-13);
}

TEST(Cli, VerifyIsByteIdenticalForFixedSeed) {
  const auto a = temp_file("a.json"), b = temp_file("b.json");
  const std::string args = "verify --suite gauss_metric " + kEllipsoid + " --seed 7 --out ";
  EXPECT_EQ(run(args + a.string()).code, 0);
  EXPECT_EQ(run(args + b.string()).code, 0);
  const auto sa = slurp(a), sb = slurp(b);
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, sb);
  const auto j = ordered_json::parse(sa);
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["config"]["suite"], "gauss_metric");
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(Cli, VerifyExitCodes) {
  EXPECT_EQ(run("verify --suite geometry " + kEllipsoid + " --points 10").code, 0);
  EXPECT_EQ(run("verify --suite ruh_vilms " + kEllipsoid + " --points 10 --tol ruh_vilms=1e-300").code, 1);
  EXPECT_EQ(run("verify --suite nope " + kEllipsoid).code, 2);
  EXPECT_EQ(run("verify --suite geometry --immersion nope").code, 2);
  EXPECT_EQ(run("verify --suite geometry --immersion ellipsoid").code, 2);
  EXPECT_EQ(run("verify --suite geometry --immersion ellipsoid --params a=2,b=1.5").code, 2);
  EXPECT_EQ(run("verify --suite geometry --immersion ellipsoid --params a2,b=1.5,c=1").code, 2);
  EXPECT_EQ(run("verify --suite geometry " + kEllipsoid + " --bogus").code, 2);
  EXPECT_EQ(run("verify --suite geometry " + kEllipsoid + " --tol nonsense=1").code, 2);
  EXPECT_EQ(run("verify --suite geometry " + kEllipsoid + " --format xml").code, 2);
  EXPECT_EQ(run("verify --suite theorem2 " + kEllipsoid).code, 2);
  EXPECT_EQ(run("verify --suite geometry --immersion " + sample("helicoid.imm") + " --params c=2").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST(Cli, CsvHasOneRowPerCheck) {
  const auto csv = run("verify --suite geometry " + kEllipsoid + " --points 10 --format csv");
  const auto js = run("verify --suite geometry " + kEllipsoid + " --points 10");
  ASSERT_EQ(csv.code, 0);
  const auto j = ordered_json::parse(js.out);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.out.begin(), csv.out.end(), '\n')), j["checks"].size() + 1);
  EXPECT_EQ(csv.out.rfind("name,paper_anchor,max_residual,tolerance,pass,points\n", 0), 0u);
}

TEST(Cli, TextFormat) {
  const auto r = run("verify --suite geometry " + kEllipsoid + " --points 10 --format text");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("  [PASS] metric_inverse"), std::string::npos);
  EXPECT_NE(r.out.find("\nPASS ("), std::string::npos);
}

TEST(Cli, IntegrateSphereArea) {
  const auto r = run("integrate --immersion sphere --params m=2,r=1 --functional one --format json");
  ASSERT_EQ(r.code, 0);
  const auto j = ordered_json::parse(r.out);
  const double pi = std::numbers::pi;
  EXPECT_LE(std::abs(j["value"].get<double>() - 4 * pi) / (4 * pi), 1e-3);
  EXPECT_EQ(j["grid"], ordered_json({32, 64}));
  EXPECT_EQ(run("integrate --immersion sphere --params m=2,r=1 --functional bogus").code, 2);
  EXPECT_EQ(run("integrate --immersion sphere --params m=2,r=1 --functional one --format csv").code, 2);
  const auto t = run("integrate --immersion sphere --params m=2,r=1 --functional gauss_curvature");
  EXPECT_EQ(t.code, 0);
  EXPECT_EQ(t.out.rfind("gauss_curvature = ", 0), 0u);
}

TEST(Cli, SampleDefinitionFiles) {
  for (const char* f : {"sphere2_r2.imm", "helicoid.imm", "monkey_saddle.imm", "torus_in_r4.imm"}) {
    const auto r = run("verify --suite geometry --immersion " + sample(f) + " --points 20");
    EXPECT_EQ(r.code, 0) << f << "\n" << r.out;
  }
  const auto h = run("verify --suite gauss_metric --immersion " + sample("helicoid.imm") + " --points 20");
  ASSERT_EQ(h.code, 0);
  EXPECT_TRUE(ordered_json::parse(h.out)["flags"]["minimal"].get<bool>());
  const auto s = run("integrate --immersion " + sample("sphere2_r2.imm") + " --functional gauss_curvature --format json");
  ASSERT_EQ(s.code, 0);
  EXPECT_NEAR(ordered_json::parse(s.out)["value"].get<double>(), 4 * std::numbers::pi, 1e-2);
}

TEST(Cli, GraphExpression) {
  const auto r = run("verify --suite geometry --immersion graph --params m=2 --graph-expr 'u1^2 - u2^2' --points 10");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(run("verify --suite geometry --immersion graph --params m=2 --graph-expr 'u1^^2' --points 10").code, 2);
}
