#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace {

struct Result {
  int code;
  std::string out;
};

Result run_cli(const std::string& args) {
  const std::string cmd = std::string(HKLAB_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {-1, ""};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "hklab_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Cli, FlowWritesTrace) {
  const Result r = run_cli("flow --geometry he --p 0.5 --grid-n 50 --t-end 0.5 --dt 0.01");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("t,divergence,mass,dissipation", 0), 0u);
}

TEST(Cli, FlowJsonReportsRate) {
  const Result r = run_cli("flow --geometry he --p 0.5 --grid-n 100 --t-end 3 --dt 0.001 --format json");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j.at("fitted_rate").get<double>(), 2.0, 0.05);
}

TEST(Cli, ScanLojHe) {
  const Result r = run_cli("scan loj-he --p-list 0,0.5 --format json");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j.at("results").size(), 2u);
  EXPECT_NEAR(j["results"][0]["constant"].get<double>(), 1.0, 1e-6);
  EXPECT_NEAR(j["results"][1]["constant"].get<double>(), 2.0, 1e-6);
}

TEST(Cli, UnknownFlagIsConfigError) { EXPECT_EQ(run_cli("flow --bogus 1").code, 2); }

TEST(Cli, BadValueIsConfigError) { EXPECT_EQ(run_cli("flow --geometry nope").code, 2); }

TEST(Cli, UnstableStepIsNumericalFailure) {
  EXPECT_EQ(run_cli("flow --geometry w --dt 0.1 --grid-n 100 --t-end 1").code, 3);
}

TEST(Cli, ConfigFileAndOverride) {
  const auto cfg = scratch("run.ini");
  {
    std::ofstream f(cfg);
    f << "geometry=he\np=0.5\ngrid-n=40\nt-end=0.2\ndt=0.01\n";
  }
  const Result from_file = run_cli("flow --config " + cfg.string());
  ASSERT_EQ(from_file.code, 0);
  const Result overridden = run_cli("flow --config " + cfg.string() + " --t-end 0.1");
  ASSERT_EQ(overridden.code, 0);
  EXPECT_LT(overridden.out.size(), from_file.out.size());
}

TEST(Cli, OutputFileAndSeedDeterminism) {
  const auto a = scratch("a.csv");
  const auto b = scratch("b.csv");
  const std::string base = "flow --geometry he --init random --seed 17 --grid-n 40 --t-end 0.2 --dt 0.01 --out ";
  ASSERT_EQ(run_cli(base + a.string()).code, 0);
  ASSERT_EQ(run_cli(base + b.string()).code, 0);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_FALSE(slurp(a).empty());
  EXPECT_EQ(slurp(a), slurp(b));
  const Result other = run_cli("flow --geometry he --init random --seed 18 --grid-n 40 --t-end 0.2 --dt 0.01");
  EXPECT_NE(other.out, slurp(a));
}

TEST(Cli, OtherSubcommands) {
  EXPECT_EQ(run_cli("geodesic --grid-n 30").code, 0);
  const Result c = run_cli("counterexample --grid-n 30 --r-list 0.5,2");
  ASSERT_EQ(c.code, 0);
  EXPECT_EQ(c.out.rfind("r,dissipation_w,dissipation_he,divergence", 0), 0u);
  const Result s = run_cli("shape-mass --grid-n 30 --t-end 0.2 --format json");
  ASSERT_EQ(s.code, 0);
  EXPECT_TRUE(nlohmann::json::parse(s.out).contains("corrected_bounds_hold"));
}
