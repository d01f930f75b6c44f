#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "chaosavg/error.hpp"
#include "chaosavg/experiments.hpp"
#include "chaosavg/parallel.hpp"
#include "chaosavg/stats.hpp"
#include "json.hpp"

using namespace chaosavg;
using nlohmann::json;

namespace {

RunOptions no_files() {
  RunOptions o;
  o.write_files = false;
  return o;
}

ErrorCode code_of(const std::string& cmd, const std::string& cfg) {
  try {
    run_command(cmd, cfg, no_files());
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::io_error;
}

const char* kSmallBm = R"({"model": "gaussian:scale=1", "series": {"2": 1}, "radii": [5, 10],
  "grid": {"half_extent": 12, "spacing": 0.25}, "n_reps": 60, "master_seed": 5})";

}  // namespace

TEST(Config, MalformedJsonIsConfigError) {
  EXPECT_EQ(code_of("special-check", "{\"n_points\": "), ErrorCode::invalid_config);
}

TEST(Config, UnknownFieldsRejected) {
  EXPECT_EQ(code_of("special-check", R"({"n_point": 100})"), ErrorCode::invalid_config);
  EXPECT_EQ(code_of("special-check", R"({"tolerances": {"ell_mass": 1e-3}})"), ErrorCode::invalid_config);
  EXPECT_EQ(code_of("bm", R"({"model": "gaussian:scale=1", "series": {"2": 1}, "radii": [5],
    "grid": {"half_extent": 10, "spacing": 0.25, "extra": 1}, "n_reps": 50})"),
            ErrorCode::invalid_config);
}

TEST(Config, WrongTypesRejected) {
  EXPECT_EQ(code_of("special-check", R"({"n_points": "many"})"), ErrorCode::invalid_config);
  EXPECT_EQ(code_of("special-check", R"({"master_seed": -3})"), ErrorCode::invalid_config);
  EXPECT_EQ(code_of("special-check", R"({"command": "bm"})"), ErrorCode::invalid_config);
  EXPECT_EQ(code_of("nonsense", "{}"), ErrorCode::invalid_config);
}

TEST(SpecialCheck, DefaultPasses) {
  const auto out = run_command("special-check", "{}", no_files());
  EXPECT_TRUE(out.pass) << out.verdict_json;
  const auto v = json::parse(out.verdict_json);
  EXPECT_GE(v["checks"].size(), 8u);
}

TEST(SpecialCheck, StrictMassToleranceFails) {
  const auto out = run_command("special-check", R"({"tolerances": {"ell_mass_abs": 1e-15}})", no_files());
  EXPECT_FALSE(out.pass);
}

TEST(Bm, ValidationRejectsRieszRankTwo) {
  EXPECT_EQ(code_of("bm", R"({"model": "riesz:beta=0.5", "series": {"2": 1}, "radii": [5],
    "grid": {"half_extent": 10, "spacing": 0.25}, "n_reps": 50,
    "sampler": {"method": "spectral", "cutoff": 10, "modes_per_axis": 100}})"),
            ErrorCode::invalid_config);
}

TEST(Bm, RadiusOutsideGridRejected) {
  EXPECT_EQ(code_of("bm", R"({"model": "gaussian:scale=1", "series": {"1": 1}, "radii": [50],
    "grid": {"half_extent": 10, "spacing": 0.25}, "n_reps": 50})"),
            ErrorCode::invalid_config);
}

TEST(Bm, FewReplicationsReportInsufficientData) {
  const auto out = run_command("bm", R"({"model": "gaussian:scale=1", "series": {"2": 1}, "radii": [5],
    "grid": {"half_extent": 10, "spacing": 0.25}, "n_reps": 10})",
                               no_files());
  EXPECT_FALSE(out.pass);
  EXPECT_NE(out.verdict_json.find("insufficient-data"), std::string::npos);
}

TEST(Bm, VerdictFieldsAndSeeds) {
  const auto out = run_command("bm", kSmallBm, no_files());
  const auto v = json::parse(out.verdict_json);
  EXPECT_NEAR(v["sigma2_theory"].get<double>(), 5.0133, 1e-4);
  EXPECT_NEAR(v["sigma2_kernel_route"].get<double>(), v["sigma2_theory"].get<double>(), 1e-6);
  ASSERT_EQ(v["per_radius"].size(), 2u);
  for (const auto& r : v["per_radius"]) {
    EXPECT_TRUE(r.contains("sigma2_empirical"));
    EXPECT_TRUE(r.contains("ks_p"));
    EXPECT_TRUE(r.contains("fourth_moment"));
  }
  // Every data row carries a seed column.
  EXPECT_EQ(out.csv.rfind("group,replication,value,seed\n", 0), 0u);
  const auto ens = MCEnsemble::from_csv(out.csv);
  EXPECT_EQ(ens.rows().size(), 120u);
  ens.check_unique_seeds();
}

TEST(Bm, SeedOverride) {
  RunOptions o = no_files();
  o.seed = 6;
  const auto a = run_command("bm", kSmallBm, o);
  const auto b = run_command("bm", kSmallBm, no_files());
  EXPECT_NE(a.csv, b.csv);
  EXPECT_NE(a.verdict_json.find("\"master_seed\": 6"), std::string::npos);
}

TEST(Replay, ByteIdenticalAcrossThreadCounts) {
  set_thread_count(1);
  const auto a = run_command("bm", kSmallBm, no_files());
  set_thread_count(4);
  const auto b = run_command("bm", kSmallBm, no_files());
  set_thread_count(0);
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_EQ(a.verdict_json, b.verdict_json);
}

TEST(She, BetaOutOfRangeRejected) {
  EXPECT_EQ(code_of("she", R"({"gamma1": "riesz:beta=1.5", "d": 1, "tasks": ["kappa_beta"]})"),
            ErrorCode::invalid_config);
}

TEST(She, TaskModelMismatchRejected) {
  EXPECT_EQ(code_of("she", R"({"gamma1": "riesz:beta=0.5", "tasks": ["sigma"]})"), ErrorCode::invalid_config);
  EXPECT_EQ(code_of("she", R"({"gamma1": "gaussian:scale=1", "tasks": ["kappa_beta"]})"), ErrorCode::invalid_config);
  EXPECT_EQ(code_of("she", R"({"gamma1": "gaussian:scale=1", "tasks": ["everything"]})"), ErrorCode::invalid_config);
  EXPECT_EQ(code_of("she", R"({"gamma1": "gaussian:scale=1", "n_paths": 1001, "n_z": 100})"),
            ErrorCode::invalid_config);
}

TEST(She, SigmaSymmetryPasses) {
  const auto out = run_command("she", R"({"gamma1": "gaussian:scale=1", "tasks": ["sigma"],
    "sigma_pairs": [[0.5, 1]], "bm_steps": 64, "n_paths": 2000, "n_z": 200})",
                               no_files());
  EXPECT_TRUE(out.pass) << out.verdict_json;
  EXPECT_EQ(out.csv.rfind("quantity,t,s,R,estimate,std_error,n,seed\n", 0), 0u);
}

TEST(She, RieszKappaAndFirstChaos) {
  const auto out = run_command("she", R"({"gamma1": "riesz:beta=0.5", "tasks": ["kappa_beta", "first_chaos"],
    "radii": [10, 30, 100]})",
                               no_files());
  EXPECT_TRUE(out.pass) << out.verdict_json;
}

TEST(TailBoundCmd, GateFoundAndDominates) {
  const auto out = run_command("tail-bound", R"({"gamma1": "gaussian:scale=1", "t": 1, "N": 1,
    "mc": {"bm_steps": 64, "n_paths": 2000, "n_z": 200}})",
                               no_files());
  EXPECT_TRUE(out.pass) << out.verdict_json;
}

TEST(Report, MergesVerdicts) {
  const auto dir = std::filesystem::temp_directory_path() / "chaosavg_report_test";
  std::filesystem::remove_all(dir);
  RunOptions o;
  o.out_dir = dir.string();
  run_command("special-check", "{}", o);
  run_command("special-check", R"({"tolerances": {"ell_mass_abs": 1e-15}})", RunOptions{std::nullopt, (dir / "strict").string(), true});
  const auto rep = run_command("report", "{}", o);
  EXPECT_TRUE(rep.pass);
  EXPECT_NE(rep.csv.find("special-check,ell_mass_d1"), std::string::npos);
  const auto both = run_command(
      "report",
      json({{"inputs", {(dir / "special-check_verdict.json").string(), (dir / "strict/special-check_verdict.json").string()}}})
          .dump(),
      o);
  EXPECT_FALSE(both.pass);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.csv"));
  std::filesystem::remove_all(dir);
}
