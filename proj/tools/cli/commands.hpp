#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowlag/flowlag.hpp"

namespace flowlag::cli {

// A runtime assertion in an experiment failed (exit code 3).
class AssertionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAssertion = 3;
inline constexpr int kExitRuntime = 4;
// Lag sweep completed but no s_start > 1 improved on the baseline.
inline constexpr int kExitOvershootCaveat = 5;

inline constexpr const char* kOvershootCaveat =
    "caveat: no s_start > 1.0 improved the terminal FLD. Applying initial energy injection "
    "in low dimensions may cause the solver to overshoot the target manifold.";

std::string code_version();

// ---------------------------------------------------------------------------
// oracle

struct JensenParams {
  GaussianFlowSpec spec{64, 1.0};
  PathKind path = PathKind::Linear;
  std::vector<double> times{0.5};
  int n_mc = 100000;
  std::uint64_t seed = 0;
};

struct JensenRow {
  double t;
  JensenGap gap;
};

std::vector<JensenRow> oracle_jensen(const JensenParams& p);
CsvTable jensen_table(const std::vector<JensenRow>& rows);

struct CrossTermParams {
  GaussianFlowSpec spec{16, 1.0};
  std::vector<double> times{0.0, 0.25, 0.5, 0.75, 1.0};
  int n_mc = 100000;
  std::uint64_t seed = 0;
};

struct CrossTermRow {
  double t;
  double closed_form;
  McEstimate monte_carlo;
};

// x_t drawn from the linear-path marginal at each t.
std::vector<CrossTermRow> oracle_cross_term(const CrossTermParams& p);
CsvTable cross_term_table(const std::vector<CrossTermRow>& rows);

struct RhoParams {
  std::vector<int> dims{4096};
  int pairs = 50000;
  double data_std = 1.0;
  std::uint64_t seed = 0;
};

std::vector<RhoStats> oracle_rho(const RhoParams& p);
CsvTable rho_table(const std::vector<RhoStats>& rows);

// ---------------------------------------------------------------------------
// schedule

struct CalibrationResult {
  ScheduleShape shape;
  double s_end;
  double target_area;
  double s_start;
  double quadrature_area;  // composite Simpson on 2^12 intervals
};

CalibrationResult calibrate_schedule(ScheduleShape shape, double target_area, double s_end);
double schedule_area_by_quadrature(const ScaleSchedule& schedule, int intervals = 4096);

// ---------------------------------------------------------------------------
// train / sample

struct TrainOutputs {
  TrainResult result;
  std::vector<std::string> artifacts;
};

// Writes checkpoint.bin, loss.csv and norm_profile_<step>.csv into out_dir.
TrainOutputs run_train(const TrainConfig& config, const std::string& out_dir);

// Training config stored in a checkpoint's metadata.
TrainConfig checkpoint_train_config(const Checkpoint& ckpt);

struct SampleParams {
  SolverSpec solver;
  int particles = 8192;
  std::uint64_t seed = 0;
  std::optional<PathKind> path;  // defaults to the checkpoint's training path
};

Trajectory run_sample(const Checkpoint& ckpt, const SampleParams& p);

// ---------------------------------------------------------------------------
// diagnose

// Reference moments of a checkpoint's data distribution: analytic for Gaussian
// data, otherwise empirical from 8192 samples.
MomentStats reference_moments(const DatasetSpec& spec, std::uint64_t seed, std::string* name);

inline constexpr int kEmpiricalReferenceSamples = 8192;

NormProfile checkpoint_norm_profile(const Checkpoint& ckpt, const std::vector<double>& grid,
                                    int n_samples, std::uint64_t seed);

std::vector<double> uniform_grid(int intervals);

CsvTable lag_table(const FldReport& baseline, const FldReport& corrected);

// ---------------------------------------------------------------------------
// lag sweep

struct LagSweepParams {
  std::vector<int> nfe{10};
  std::vector<double> s_start{1.0, 1.05, 1.1, 1.15, 1.2};
  double s_end = 1.0;
  // Adds the (1.0 -> 1.1) and (1.05 -> 1.05) rows.
  bool include_reference_rows = true;
  SolverMethod method = SolverMethod::Euler;
  int particles = 8192;
  int floor_nfe = 500;
  std::vector<double> checkpoints{0.2, 0.4, 0.6, 0.8, 1.0};
  std::uint64_t seed = 0;
  std::optional<PathKind> path;
};

struct LagCell {
  int nfe = 0;
  ScaleSchedule schedule;
  FldReport report;
  std::vector<double> improvement;  // vs the uncorrected run at the same nfe
};

struct LagSweepResult {
  std::vector<int> nfe;
  int floor_nfe = 0;
  std::vector<LagCell> cells;
  std::vector<FldReport> baselines;  // one per nfe, uncorrected solver
  FldReport floor;                   // uncorrected solver at floor_nfe
  std::vector<double> best_s_start;  // per nfe, over the s_start sweep
  std::vector<double> best_terminal;
  bool identity_matches_baseline = true;
  bool overshoot = false;  // no s_start > 1 strictly improved for some nfe
  std::string reference;
};

LagSweepResult lag_sweep(const VelocityField& field, const Interpolant& interp,
                         const MomentStats& reference, const std::string& reference_name,
                         const LagSweepParams& p);
CsvTable lag_sweep_table(const LagSweepResult& r);

}  // namespace flowlag::cli
