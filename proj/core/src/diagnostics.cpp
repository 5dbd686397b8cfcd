#include "flowlag/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "flowlag/errors.hpp"

namespace flowlag {

NormProfile norm_profile(const VelocityField& field, const Interpolant& interp,
                         const DataSampler& data, const std::vector<double>& grid, int n_samples,
                         std::uint64_t seed) {
  if (n_samples < kMinProfileSamples)
    throw ConfigError("norm_profile needs n_samples >= " + std::to_string(kMinProfileSamples));
  if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("norm_profile: grid not sorted");

  Rng noise_rng = make_rng(seed, "profile/noise");
  Rng data_rng = make_rng(seed, "profile/data");
  const Eigen::MatrixXd x0 = standard_normal(noise_rng, field.dim(), n_samples);
  const Eigen::MatrixXd x1 = data(n_samples, data_rng);
  if (x1.rows() != field.dim() || x1.cols() != n_samples)
    throw ShapeError("norm_profile: data sampler returned the wrong shape");

  NormProfile p;
  p.n_samples = n_samples;
  double pooled = 0.0;
  for (double t : grid) {
    const Eigen::MatrixXd xt = interp.sample_xt(x0, x1, t);
    const Eigen::ArrayXd norms = field.evaluate(xt, t).colwise().norm().transpose();
    const double mean = norms.mean();
    const double var = (norms - mean).square().sum() / std::max(1, n_samples - 1);
    const double target_sq = interp.target_velocity(x0, x1, t).colwise().squaredNorm().mean();
    p.times.push_back(t);
    p.mean.push_back(mean);
    p.std_dev.push_back(std::sqrt(var));
    p.target_norm.push_back(std::sqrt(target_sq));
    pooled += target_sq;
  }
  p.reference_norm = grid.empty() ? 0.0 : std::sqrt(pooled / static_cast<double>(grid.size()));
  return p;
}

MomentStats MomentStats::from_samples(const Eigen::Ref<const Eigen::MatrixXd>& samples) {
  const Eigen::Index n = samples.cols();
  if (n < 1) throw ConfigError("moments: need at least one sample");
  MomentStats s;
  s.count = n;
  s.mean = samples.rowwise().mean();
  const Eigen::MatrixXd centred = samples.colwise() - s.mean;
  s.cov = n > 1 ? Eigen::MatrixXd(centred * centred.transpose() / static_cast<double>(n - 1))
                : Eigen::MatrixXd::Zero(samples.rows(), samples.rows());
  return s;
}

MomentStats MomentStats::isotropic_gaussian(int dim, double std) {
  MomentStats s;
  s.mean = Eigen::VectorXd::Zero(dim);
  s.cov = Eigen::MatrixXd::Identity(dim, dim) * (std * std);
  s.count = 0;
  return s;
}

MomentStats MomentStats::merge(const MomentStats& a, const MomentStats& b) {
  if (a.dim() != b.dim()) throw ShapeError("moments: dimension mismatch in merge");
  if (a.count < 1 || b.count < 1) throw ConfigError("moments: merge needs sample-based stats");
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  const double n = na + nb;
  const Eigen::VectorXd delta = b.mean - a.mean;
  MomentStats m;
  m.count = a.count + b.count;
  m.mean = a.mean + delta * (nb / n);
  // Scatter matrices add, plus the between-group term.
  const Eigen::MatrixXd scatter = a.cov * (na - 1.0) + b.cov * (nb - 1.0) +
                                  delta * delta.transpose() * (na * nb / n);
  m.cov = scatter / (n - 1.0);
  return m;
}

Eigen::MatrixXd sqrtm_psd(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.rows() != m.cols()) throw ShapeError("sqrtm_psd: matrix must be square");
  if (m.size() == 0) return Eigen::MatrixXd(0, 0);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw DomainError("sqrtm_psd: matrix is not symmetric");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericError("sqrtm_psd: eigen decomposition failed");
  Eigen::VectorXd ev = eig.eigenvalues();
  if (ev.minCoeff() < -1e-8 * scale) throw DomainError("sqrtm_psd: matrix is not PSD");
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

namespace {

double frechet_impl(const MomentStats& a, const MomentStats& b, bool verify) {
  if (a.dim() != b.dim()) throw ShapeError("frechet: dimension mismatch");
  const Eigen::MatrixXd sa = sqrtm_psd(a.cov);
  Eigen::MatrixXd inner = sa * b.cov * sa;
  inner = 0.5 * (inner + inner.transpose());
  const Eigen::MatrixXd cross = sqrtm_psd(inner);
  if (verify) {
    for (const auto* pair : {&sa, &cross}) {
      const Eigen::MatrixXd& s = *pair;
      const Eigen::MatrixXd& target = pair == &sa ? a.cov : inner;
      if ((s * s - target).norm() > 1e-8 * std::max(1.0, target.norm()))
        throw NumericError("frechet: sqrtm reconstruction check failed");
    }
  }
  const double d = (a.mean - b.mean).squaredNorm() +
                   (a.cov.trace() + b.cov.trace() - 2.0 * cross.trace());
  return std::max(0.0, d);
}

}  // namespace

double frechet_gaussian(const MomentStats& a, const MomentStats& b) {
  return frechet_impl(a, b, false);
}

MomentStats checkpoint_moments(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                               const FldOptions& options, std::vector<std::string>* warnings) {
  MomentStats s = MomentStats::from_samples(batch);
  const int d = s.dim();
  const double avg_var = s.cov.trace() / d;
  if (batch.cols() < d + 1) {
    if (warnings)
      warnings->push_back("batch of " + std::to_string(batch.cols()) + " samples < D + 1 = " +
                          std::to_string(d + 1) + "; covariance shrunk toward tr(S)/D I");
    const double w = options.small_batch_shrinkage;
    s.cov = (1.0 - w) * s.cov + w * avg_var * Eigen::MatrixXd::Identity(d, d);
  }
  s.cov.diagonal().array() += options.ridge_scale * avg_var;
  return s;
}

namespace {

// Delete-one-group jackknife over contiguous column blocks.
double jackknife_stderr(const Eigen::Ref<const Eigen::MatrixXd>& batch, const MomentStats& reference,
                        const FldOptions& options) {
  const int g = options.jackknife_groups;
  const Eigen::Index n = batch.cols();
  if (g < 2 || n < 2 * g) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> theta;
  for (int k = 0; k < g; ++k) {
    const Eigen::Index lo = n * k / g;
    const Eigen::Index hi = n * (k + 1) / g;
    Eigen::MatrixXd rest(batch.rows(), n - (hi - lo));
    rest << batch.leftCols(lo), batch.rightCols(n - hi);
    theta.push_back(frechet_impl(checkpoint_moments(rest, options, nullptr), reference, false));
  }
  double mean = 0.0;
  for (double v : theta) mean += v / g;
  double ss = 0.0;
  for (double v : theta) ss += (v - mean) * (v - mean);
  return std::sqrt(ss * (g - 1) / g);
}

}  // namespace

FldReport track_fld(const Trajectory& traj, const MomentStats& reference,
                    const std::string& reference_name, const FldOptions& options) {
  if (reference.dim() != traj.dim) throw ShapeError("track_fld: reference dimension mismatch");
  FldReport report;
  report.reference = reference_name;
  report.n_samples = traj.n_particles;
  report.times = traj.times;
  for (const auto& batch : traj.states) {
    const auto stats = checkpoint_moments(batch, options, &report.warnings);
    report.values.push_back(frechet_impl(stats, reference, options.verify));
    report.std_errors.push_back(jackknife_stderr(batch, reference, options));
  }
  return report;
}

double split_half_noise_floor(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                              const FldOptions& options) {
  const Eigen::Index half = samples.cols() / 2;
  if (half < 2) throw ConfigError("split-half floor needs at least 4 samples");
  const auto a = checkpoint_moments(samples.leftCols(half), options, nullptr);
  const auto b = checkpoint_moments(samples.middleCols(half, half), options, nullptr);
  return frechet_impl(a, b, options.verify);
}

std::vector<double> lag_improvement(const FldReport& baseline, const FldReport& corrected) {
  if (baseline.times != corrected.times || baseline.values.size() != corrected.values.size())
    throw ShapeError("lag_improvement: checkpoint grids differ");
  if (baseline.reference != corrected.reference)
    throw ShapeError("lag_improvement: reference distributions differ");
  std::vector<double> out;
  for (std::size_t i = 0; i < baseline.values.size(); ++i) {
    const double b = baseline.values[i];
    const double c = corrected.values[i];
    if (b == c) {
      out.push_back(0.0);
    } else if (b == 0.0) {
      out.push_back(-std::numeric_limits<double>::infinity());
    } else {
      out.push_back((b - c) / b);
    }
  }
  return out;
}

}  // namespace flowlag
