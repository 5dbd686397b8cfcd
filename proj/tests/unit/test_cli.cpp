#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"

#include "cli/app.hpp"
#include "cli/experiment.hpp"
#include "cli/playbook.hpp"
#include "flowlag/errors.hpp"

using namespace flowlag;
using namespace flowlag::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "flowlag");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("flowlag_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

}  // namespace

TEST(Cli, ScheduleCalibratePrintsTableValue) {
  const Result r = invoke({"schedule-calibrate", "--shape", "quad-in", "--area", "1.05"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "s_start = 1.075\n");
  EXPECT_EQ(invoke({"schedule-calibrate", "--shape", "quad-out", "--area", "1.05"}).out, "s_start = 1.15\n");
}

TEST(Cli, OracleJensenRow) {
  const Result r = invoke({"oracle", "jensen", "--dim", "64", "--t", "0.5", "--n-mc", "20000"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header, "t,learned_energy,target_energy,mc_stderr,inconclusive");
  std::vector<double> cells;
  std::stringstream ss(row);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(std::stod(cell));
  ASSERT_EQ(cells.size(), 5u);
  EXPECT_LT(cells[1], cells[2]);
}

TEST(Cli, RhoCsvColumns) {
  const Result r = invoke({"oracle", "rho", "--dim", "64", "--pairs", "10000"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "D,mean_rho,p99_rho,max_rho");
}

TEST(Cli, MissingRequiredFieldExitsTwoWithoutArtifacts) {
  const fs::path dir = fresh_dir("missing");
  const fs::path config = fs::temp_directory_path() / "flowlag_cli_missing.json";
  write(config, R"({"experiment": "oracle", "seed": 1, "output_dir": ")" + dir.string() +
                    R"(", "oracle": {"kind": "jensen", "t": [0.5]}})");
  const Result r = invoke({"run", config.string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("oracle.dim"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Cli, UnknownFieldAndBadValuesExitTwo) {
  const fs::path config = fs::temp_directory_path() / "flowlag_cli_unknown.json";
  write(config, R"({"experiment": "schedule-calibrate", "seed": 0,
                    "calibrate": {"shape": "quad-in", "area": 1.05, "colour": 1}})");
  Result r = invoke({"run", config.string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("calibrate.colour"), std::string::npos) << r.err;

  write(config, R"({"experiment": "schedule-calibrate", "seed": 0,
                    "calibrate": {"shape": "spline", "area": 1.05}})");
  r = invoke({"run", config.string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("calibrate.shape"), std::string::npos) << r.err;

  EXPECT_EQ(invoke({"schedule-calibrate", "--area", "1.05"}).code, kExitConfig);
  EXPECT_EQ(invoke({"bogus"}).code, kExitConfig);
  EXPECT_EQ(invoke({"run", config.string(), "--nope"}).code, kExitConfig);
}

TEST(Cli, ExitCodeMapping) {
  std::ostringstream err;
  EXPECT_EQ(run_guarded(err, [] { return 0; }), kExitOk);
  EXPECT_EQ(run_guarded(err, []() -> int { throw ConfigError("x"); }), kExitConfig);
  EXPECT_EQ(run_guarded(err, []() -> int { throw AssertionFailure("x"); }), kExitAssertion);
  EXPECT_EQ(run_guarded(err, []() -> int { throw NumericError("x"); }), kExitRuntime);
  EXPECT_EQ(run_guarded(err, []() -> int { throw FormatError("x"); }), kExitRuntime);
}

TEST(Cli, ThreadLimitValidation) {
  setenv("FLOWLAG_THREADS", "zero", 1);
  EXPECT_EQ(invoke({"schedule-calibrate", "--shape", "linear", "--area", "1.05"}).code, kExitConfig);
  setenv("FLOWLAG_THREADS", "1", 1);
  EXPECT_EQ(invoke({"schedule-calibrate", "--shape", "linear", "--area", "1.05"}).code, kExitOk);
  unsetenv("FLOWLAG_THREADS");
}

TEST(Cli, ManifestAndDeterministicArtifacts) {
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  for (const auto& dir : {a, b}) {
    const Result r = invoke({"oracle", "cross-term", "--dim", "8", "--n-mc", "5000", "--seed", "3",
                          "--out", dir.string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  EXPECT_EQ(slurp(a / "cross_term.csv"), slurp(b / "cross_term.csv"));
  const auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
  const auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
  EXPECT_EQ(ma["seed"], 3);
  EXPECT_EQ(ma["code_version"], code_version());
  EXPECT_EQ(ma["artifacts"], nlohmann::json::array({"cross_term.csv"}));
  // The output directory is part of the config, so the hashes differ; the
  // data artifacts do not.
  EXPECT_NE(ma["config_hash"], mb["config_hash"]);
  EXPECT_TRUE(fs::exists(a / "config.json"));
}

TEST(Cli, TrainSampleDiagnoseAndSweep) {
  const fs::path dir = fresh_dir("pipeline");
  const fs::path config = dir / "train.json";
  write(config, R"({"dataset": {"kind": "gaussian", "dim": 4}, "path": "gvp", "loss": "mafm",
                    "steps": 200, "seed": 5, "hidden": [32, 32], "log_every": 50,
                    "profile_every": 100})");
  Result r = invoke({"train", "--config", config.string(), "--out", (dir / "run").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* name : {"checkpoint.bin", "loss.csv", "norm_profile_100.csv", "norm_profile_200.csv",
                           "manifest.json", "config.json"})
    EXPECT_TRUE(fs::exists(dir / "run" / name)) << name;
  const std::string loss = slurp(dir / "run" / "loss.csv");
  EXPECT_EQ(loss.substr(0, loss.find('\n')), "step,fm_term,magnitude_term,total");

  const std::string ckpt = (dir / "run" / "checkpoint.bin").string();
  r = invoke({"sample", "--checkpoint", ckpt, "--nfe", "8", "--particles", "256", "--out",
           (dir / "base").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  r = invoke({"sample", "--checkpoint", ckpt, "--nfe", "8", "--particles", "256", "--schedule",
           "linear:1.1:1.0", "--out", (dir / "ssc").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Trajectory t = load_trajectory((dir / "base" / "trajectory.bin").string());
  EXPECT_EQ(t.dim, 4);
  EXPECT_EQ(t.n_particles, 256);

  r = invoke({"diagnose", "fld", "--trajectory", (dir / "base" / "trajectory.bin").string(), "--checkpoint", ckpt});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "t,value,stderr");
  r = invoke({"diagnose", "lag", "--baseline", (dir / "base" / "trajectory.bin").string(), "--corrected",
           (dir / "ssc" / "trajectory.bin").string(), "--dataset", "gaussian", "--dim", "4"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "t,value,stderr,baseline_fld,corrected_fld");
  r = invoke({"diagnose", "norm", "--checkpoint", ckpt, "--samples", "1000", "--grid", "4"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 6);

  r = invoke({"lag-sweep", "--checkpoint", ckpt, "--particles", "512", "--floor-nfe", "50", "--out",
           (dir / "sweep").string()});
  ASSERT_TRUE(r.code == kExitOk || r.code == kExitOvershootCaveat) << r.err;
  const std::string table = slurp(dir / "sweep" / "lag_sweep.csv");
  // floor, baseline, five s_start cells and the two reference rows.
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 1 + 2 + 7);
  EXPECT_NE(table.find("linear:1:1.1"), std::string::npos);
  EXPECT_NE(table.find("linear:1.05:1.05"), std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(dir / "sweep" / "manifest.json"));
  if (r.code == kExitOvershootCaveat) {
    EXPECT_NE(r.err.find("may cause the solver to overshoot"), std::string::npos);
    EXPECT_TRUE(manifest.contains("caveat"));
  } else {
    EXPECT_FALSE(manifest.contains("caveat"));
  }

  // Same manifest hash, same bytes.
  const fs::path again = fresh_dir("pipeline_again");
  fs::create_directories(again);
  r = invoke({"train", "--config", config.string(), "--out", (dir / "run").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(dir / "run" / "checkpoint.bin"), slurp(ckpt));
}

TEST(Playbook, EveryCriterionHasOneInvocation) {
  for (int id = 1; id <= kCriterionCount; ++id)
    EXPECT_EQ(Playbook::invocation(id), "flowlag verify --criterion " + std::to_string(id));
  EXPECT_THROW(Playbook::invocation(13), ConfigError);
}
