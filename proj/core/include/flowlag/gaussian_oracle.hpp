#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "flowlag/interpolant.hpp"
#include "flowlag/rng.hpp"

namespace flowlag {

// Data x1 ~ N(0, data_std^2 I_D), noise x0 ~ N(0, I_D), independently coupled.
struct GaussianFlowSpec {
  int dim = 1;
  double data_std = 1.0;

  void validate() const;
  // Per-coordinate marginal variance of x_t: alpha^2 data_std^2 + sigma^2.
  double marginal_variance(const PathCoefficients& c) const;
};

// Coefficient c(t) of the MSE-optimal field v*(x, t) = c(t) x.
double oracle_coefficient(const GaussianFlowSpec& spec, const Interpolant& interp, double t);

// Columns of x are states; returns c(t) x.
Eigen::MatrixXd oracle_velocity(const GaussianFlowSpec& spec, const Interpolant& interp,
                                const Eigen::Ref<const Eigen::MatrixXd>& x, double t);

struct ConditionalMeans {
  Eigen::VectorXd data;   // E[x1 | x_t]
  Eigen::VectorXd noise;  // E[x0 | x_t]
};

ConditionalMeans conditional_means(const GaussianFlowSpec& spec, const Interpolant& interp,
                                   const Eigen::Ref<const Eigen::VectorXd>& x, double t);

// Exact draw of (x0, x1) from their joint conditional given x_t = x. The
// conditional covariance is rank one per coordinate, so one N(0, 1) draw per
// coordinate suffices.
struct EndpointSample {
  Eigen::MatrixXd x0;
  Eigen::MatrixXd x1;
};
EndpointSample sample_endpoints_given_xt(const GaussianFlowSpec& spec, const Interpolant& interp,
                                         const Eigen::Ref<const Eigen::VectorXd>& x, double t,
                                         int n, Rng& rng);

// E[<x0, x1> | x_t] for the linear path. Throws DomainError for other paths.
double cross_term_expectation(const GaussianFlowSpec& spec, const Interpolant& interp,
                              const Eigen::Ref<const Eigen::VectorXd>& x_t, double t);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Exact-conditional Monte Carlo estimate of E[<x0, x1> | x_t].
McEstimate cross_term_monte_carlo(const GaussianFlowSpec& spec, const Interpolant& interp,
                                  const Eigen::Ref<const Eigen::VectorXd>& x_t, double t,
                                  int n_mc, Rng& rng);

struct JensenGap {
  double learned_energy = 0.0;  // ||v*(x, t)||^2
  double target_energy = 0.0;   // MC estimate of E[||v_target||^2 | x_t]
  double mc_stderr = 0.0;
  // Gap not resolved beyond 3 standard errors.
  bool inconclusive = false;
};

inline constexpr int kMinJensenSamples = 1000;

JensenGap jensen_gap(const GaussianFlowSpec& spec, const Interpolant& interp,
                     const Eigen::Ref<const Eigen::VectorXd>& x, double t, int n_mc, Rng& rng);

struct RhoStats {
  int dim = 0;
  int n_pairs = 0;
  double mean = 0.0;
  double p99 = 0.0;
  double max = 0.0;
};

inline constexpr int kMinRhoPairs = 10000;

// rho = 2 |<x0, x1>| / (||x0||^2 + ||x1||^2) over independent Gaussian pairs.
RhoStats rho_statistics(int dim, int n_pairs, double data_std, std::uint64_t seed);

// A point with ||x||^2 = D * s_t^2 exactly (the typical shell of the x_t marginal).
Eigen::VectorXd typical_shell_point(const GaussianFlowSpec& spec, const Interpolant& interp,
                                    double t, Rng& rng);

}  // namespace flowlag
