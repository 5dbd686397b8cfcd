#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flowlag/interpolant.hpp"
#include "flowlag/rng.hpp"
#include "flowlag/solver.hpp"
#include "flowlag/velocity_field.hpp"

namespace flowlag {

// ---------------------------------------------------------------------------
// Velocity-norm profile

using DataSampler = std::function<Eigen::MatrixXd(int n, Rng& rng)>;

struct NormProfile {
  std::vector<double> times;
  std::vector<double> mean;         // mean ||v(x_t, t)||
  std::vector<double> std_dev;      // std of ||v(x_t, t)||
  std::vector<double> target_norm;  // sqrt(mean ||v_target||^2) at each t
  double reference_norm = 0.0;      // target_norm pooled over the grid
  int n_samples = 0;
};

inline constexpr int kMinProfileSamples = 1000;

// For each grid time, draws n_samples (x0, x1) pairs (the same pairs at every
// t), forms x_t and records statistics of ||field(x_t, t)||.
NormProfile norm_profile(const VelocityField& field, const Interpolant& interp,
                         const DataSampler& data, const std::vector<double>& grid, int n_samples,
                         std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gaussian moments and Frechet distance

struct MomentStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::int64_t count = 0;

  int dim() const { return static_cast<int>(mean.size()); }

  // Columns are samples; unbiased (n - 1) covariance.
  static MomentStats from_samples(const Eigen::Ref<const Eigen::MatrixXd>& samples);
  // N(0, std^2 I) with count 0 marking analytic moments.
  static MomentStats isotropic_gaussian(int dim, double std);
  // Exact pooled moments of two sample sets.
  static MomentStats merge(const MomentStats& a, const MomentStats& b);
};

// Principal square root of a symmetric PSD matrix. Throws ShapeError for
// non-square input, DomainError for asymmetry beyond 1e-8 (relative) or an
// eigenvalue below -1e-8 (relative); small negative eigenvalues clip to 0.
Eigen::MatrixXd sqrtm_psd(const Eigen::Ref<const Eigen::MatrixXd>& m);

// ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2), clipped at 0.
double frechet_gaussian(const MomentStats& a, const MomentStats& b);

// ---------------------------------------------------------------------------
// Trajectory tracking

struct FldReport {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> std_errors;  // jackknife; NaN when disabled or the batch is too small
  std::string reference;
  int n_samples = 0;
  std::vector<std::string> warnings;
};

struct FldOptions {
  // Covariance ridge: eps = ridge_scale * tr(S) / D added to each checkpoint batch.
  double ridge_scale = 1e-6;
  // Shrinkage weight toward tr(S)/D I when a batch has fewer than D + 1 samples.
  double small_batch_shrinkage = 0.5;
  // Groups for the jackknife standard error; 0 disables it.
  int jackknife_groups = 8;
  // Re-check every sqrtm against its square.
  bool verify = false;
};

// Regularized moments of one checkpoint batch, as used by track_fld.
MomentStats checkpoint_moments(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                               const FldOptions& options, std::vector<std::string>* warnings);

FldReport track_fld(const Trajectory& traj, const MomentStats& reference,
                    const std::string& reference_name, const FldOptions& options = {});

// Frechet distance between the two halves of a sample set: the sampling-noise
// floor of an FLD computed from that many samples.
double split_half_noise_floor(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                              const FldOptions& options = {});

// (baseline - corrected) / baseline per checkpoint.
std::vector<double> lag_improvement(const FldReport& baseline, const FldReport& corrected);

}  // namespace flowlag
