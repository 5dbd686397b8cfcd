#include "flowlag/gaussian_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "flowlag/errors.hpp"

namespace flowlag {
namespace {

void check_dim(const GaussianFlowSpec& spec, Eigen::Index rows) {
  if (rows != spec.dim)
    throw ShapeError("state dimension " + std::to_string(rows) + " != spec dim " +
                     std::to_string(spec.dim));
}

double checked_variance(const GaussianFlowSpec& spec, const PathCoefficients& c) {
  const double s2 = spec.marginal_variance(c);
  if (!(s2 > 0.0)) throw NumericError("degenerate marginal variance s_t^2 <= 0");
  return s2;
}

}  // namespace

void GaussianFlowSpec::validate() const {
  if (dim < 1) throw ConfigError("gaussian spec: dim must be >= 1");
  if (!(data_std > 0.0) || !std::isfinite(data_std))
    throw ConfigError("gaussian spec: data_std must be positive and finite");
}

double GaussianFlowSpec::marginal_variance(const PathCoefficients& c) const {
  return c.alpha * c.alpha * data_std * data_std + c.sigma * c.sigma;
}

double oracle_coefficient(const GaussianFlowSpec& spec, const Interpolant& interp, double t) {
  const auto c = interp.coefficients(t);
  const double v1 = spec.data_std * spec.data_std;
  const double s2 = checked_variance(spec, c);
  return (c.d_alpha * c.alpha * v1 + c.d_sigma * c.sigma) / s2;
}

Eigen::MatrixXd oracle_velocity(const GaussianFlowSpec& spec, const Interpolant& interp,
                                const Eigen::Ref<const Eigen::MatrixXd>& x, double t) {
  check_dim(spec, x.rows());
  return oracle_coefficient(spec, interp, t) * x;
}

ConditionalMeans conditional_means(const GaussianFlowSpec& spec, const Interpolant& interp,
                                   const Eigen::Ref<const Eigen::VectorXd>& x, double t) {
  check_dim(spec, x.size());
  const auto c = interp.coefficients(t);
  const double s2 = checked_variance(spec, c);
  const double v1 = spec.data_std * spec.data_std;
  return {(c.alpha * v1 / s2) * x, (c.sigma / s2) * x};
}

EndpointSample sample_endpoints_given_xt(const GaussianFlowSpec& spec, const Interpolant& interp,
                                         const Eigen::Ref<const Eigen::VectorXd>& x, double t,
                                         int n, Rng& rng) {
  check_dim(spec, x.size());
  const auto c = interp.coefficients(t);
  const double s2 = checked_variance(spec, c);
  const double s = std::sqrt(s2);
  const double v1 = spec.data_std * spec.data_std;

  // (x1, x0) | x_t per coordinate: mean (alpha v1, sigma) x / s^2,
  // covariance w w^T with w = (data_std sigma, -alpha data_std) / s.
  const Eigen::VectorXd mean1 = (c.alpha * v1 / s2) * x;
  const Eigen::VectorXd mean0 = (c.sigma / s2) * x;
  const double w1 = spec.data_std * c.sigma / s;
  const double w0 = -c.alpha * spec.data_std / s;

  const Eigen::MatrixXd z = standard_normal(rng, spec.dim, n);
  EndpointSample out;
  out.x1 = (w1 * z).colwise() + mean1;
  out.x0 = (w0 * z).colwise() + mean0;
  return out;
}

double cross_term_expectation(const GaussianFlowSpec& spec, const Interpolant& interp,
                              const Eigen::Ref<const Eigen::VectorXd>& x_t, double t) {
  if (interp.kind() != PathKind::Linear)
    throw DomainError("cross-term closed form is defined for the linear path only");
  check_unit_time(t);
  check_dim(spec, x_t.size());
  const double v1 = spec.data_std * spec.data_std;
  const double s2 = t * t * v1 + (1.0 - t) * (1.0 - t);
  return (1.0 - t) * t * (v1 / s2) * (x_t.squaredNorm() / s2 - spec.dim);
}

McEstimate cross_term_monte_carlo(const GaussianFlowSpec& spec, const Interpolant& interp,
                                  const Eigen::Ref<const Eigen::VectorXd>& x_t, double t,
                                  int n_mc, Rng& rng) {
  if (n_mc < 2) throw ConfigError("cross-term MC needs at least 2 samples");
  const auto draw = sample_endpoints_given_xt(spec, interp, x_t, t, n_mc, rng);
  const Eigen::ArrayXd dots = (draw.x0.array() * draw.x1.array()).colwise().sum().transpose();
  const double mean = dots.mean();
  const double var = (dots - mean).square().sum() / (n_mc - 1);
  return {mean, std::sqrt(var / n_mc)};
}

JensenGap jensen_gap(const GaussianFlowSpec& spec, const Interpolant& interp,
                     const Eigen::Ref<const Eigen::VectorXd>& x, double t, int n_mc, Rng& rng) {
  if (n_mc < kMinJensenSamples)
    throw ConfigError("jensen_gap needs n_mc >= " + std::to_string(kMinJensenSamples));
  const auto c = interp.coefficients(t);

  JensenGap gap;
  gap.learned_energy = oracle_velocity(spec, interp, x, t).squaredNorm();

  // Sharded so memory stays bounded for large n_mc; shards consume the stream in order.
  constexpr int kShard = 8192;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int done = 0; done < n_mc; done += kShard) {
    const int n = std::min(kShard, n_mc - done);
    const auto draw = sample_endpoints_given_xt(spec, interp, x, t, n, rng);
    const Eigen::ArrayXd energy =
        (c.d_alpha * draw.x1 + c.d_sigma * draw.x0).colwise().squaredNorm().transpose();
    sum += energy.sum();
    sum_sq += energy.square().sum();
  }
  const double mean = sum / n_mc;
  const double var = std::max(0.0, (sum_sq - n_mc * mean * mean) / (n_mc - 1));
  gap.target_energy = mean;
  gap.mc_stderr = std::sqrt(var / n_mc);
  gap.inconclusive = !(gap.target_energy - gap.learned_energy > 3.0 * gap.mc_stderr);
  return gap;
}

RhoStats rho_statistics(int dim, int n_pairs, double data_std, std::uint64_t seed) {
  if (dim < 1) throw ConfigError("rho_statistics: dim must be >= 1");
  if (n_pairs < kMinRhoPairs)
    throw ConfigError("rho_statistics needs n_pairs >= " + std::to_string(kMinRhoPairs));
  if (!(data_std > 0.0)) throw ConfigError("rho_statistics: data_std must be positive");

  Rng noise_rng = make_rng(seed, "rho/noise");
  Rng data_rng = make_rng(seed, "rho/data");
  std::vector<double> rho(static_cast<std::size_t>(n_pairs));
  Eigen::VectorXd x0(dim);
  Eigen::VectorXd x1(dim);
  for (int i = 0; i < n_pairs; ++i) {
    fill_standard_normal(noise_rng, x0);
    fill_standard_normal(data_rng, x1);
    x1 *= data_std;
    rho[static_cast<std::size_t>(i)] =
        2.0 * std::abs(x0.dot(x1)) / (x0.squaredNorm() + x1.squaredNorm());
  }

  RhoStats stats;
  stats.dim = dim;
  stats.n_pairs = n_pairs;
  double total = 0.0;
  for (double r : rho) total += r;
  stats.mean = total / n_pairs;
  std::sort(rho.begin(), rho.end());
  stats.max = rho.back();
  // Linear interpolation between order statistics (type 7 quantile).
  const double pos = 0.99 * (n_pairs - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, rho.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  stats.p99 = rho[lo] + frac * (rho[hi] - rho[lo]);
  return stats;
}

Eigen::VectorXd typical_shell_point(const GaussianFlowSpec& spec, const Interpolant& interp,
                                    double t, Rng& rng) {
  const auto c = interp.coefficients(t);
  const double s2 = checked_variance(spec, c);
  Eigen::VectorXd x = standard_normal(rng, spec.dim, 1);
  x *= std::sqrt(spec.dim * s2) / x.norm();
  return x;
}

}  // namespace flowlag
