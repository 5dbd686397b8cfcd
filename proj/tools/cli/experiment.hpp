#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cli/commands.hpp"

namespace flowlag::cli {

struct SampleBlock {
  std::filesystem::path checkpoint;
  SampleParams params;
};

enum class OracleKind { Jensen, CrossTerm };

struct OracleBlock {
  OracleKind kind = OracleKind::Jensen;
  JensenParams jensen;
  CrossTermParams cross_term;
};

enum class DiagnoseKind { Norm, Fld, Lag };

struct DiagnoseBlock {
  DiagnoseKind kind = DiagnoseKind::Norm;
  std::filesystem::path checkpoint;  // norm; dataset source for fld / lag
  std::optional<DatasetSpec> dataset;
  std::filesystem::path trajectory;  // fld
  std::filesystem::path baseline;    // lag
  std::filesystem::path corrected;   // lag
  int samples = 2000;
  int grid_intervals = 20;
};

struct LagSweepBlock {
  std::filesystem::path checkpoint;
  LagSweepParams params;
};

struct CalibrateBlock {
  ScheduleShape shape = ScheduleShape::Linear;
  double area = 1.0;
  double s_end = 1.0;
};

using ExperimentParams = std::variant<TrainConfig, SampleBlock, OracleBlock, DiagnoseBlock,
                                      LagSweepBlock, CalibrateBlock, RhoParams>;

// Parsed form of an experiment config file. Relative paths are resolved
// against base_dir.
struct ExperimentConfig {
  std::string experiment;
  std::optional<std::filesystem::path> output_dir;
  std::uint64_t seed = 0;
  bool verify = false;
  std::string canonical_json;  // hashed into the manifest
  ExperimentParams params;
};

// Throws ConfigError with the offending field's dotted path.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir);

struct ExperimentOutcome {
  int exit_code = kExitOk;
  std::vector<std::string> artifacts;
};

// Runs the experiment, prints its primary table or value to out and, when an
// output directory is set, writes artifacts plus manifest.json. Assertion
// failures in verify mode throw AssertionFailure.
ExperimentOutcome execute_experiment(const ExperimentConfig& config, std::ostream& out,
                                     std::ostream& err);

// Maps exceptions to exit codes and prints the message to err.
int run_guarded(std::ostream& err, const std::function<int()>& body);

int run_experiment_file(const std::filesystem::path& path, std::ostream& out, std::ostream& err);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace flowlag::cli
