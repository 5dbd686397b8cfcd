#include <cmath>

#include <gtest/gtest.h>

#include "flowlag/diagnostics.hpp"
#include "flowlag/errors.hpp"
#include "flowlag/gaussian_oracle.hpp"

using namespace flowlag;

namespace {

MomentStats gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  MomentStats s;
  s.mean = mean;
  s.cov = cov;
  return s;
}

MomentStats gaussian1d(double mean, double var) {
  return gaussian(Eigen::VectorXd::Constant(1, mean), Eigen::MatrixXd::Constant(1, 1, var));
}

Eigen::MatrixXd random_spd(int d, Rng& rng) {
  const Eigen::MatrixXd g = standard_normal(rng, d, d);
  return g * g.transpose() / d + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

}  // namespace

TEST(Frechet, OneDimensionalClosedForms) {
  EXPECT_NEAR(frechet_gaussian(gaussian1d(1, 1), gaussian1d(0, 1)), 1.0, 1e-12);
  EXPECT_NEAR(frechet_gaussian(gaussian1d(0, 1), gaussian1d(0, 4)), 1.0, 1e-12);
  EXPECT_NEAR(frechet_gaussian(gaussian1d(2, 9), gaussian1d(-1, 1)), 9.0 + 4.0, 1e-12);
  EXPECT_EQ(frechet_gaussian(gaussian1d(0.3, 2), gaussian1d(0.3, 2)), 0.0);
}

TEST(Frechet, DiagonalClosedForm) {
  Rng rng(1);
  const int d = 20;
  const Eigen::VectorXd va = (standard_normal(rng, d, 1).array().square() + 0.1).matrix();
  const Eigen::VectorXd vb = (standard_normal(rng, d, 1).array().square() + 0.1).matrix();
  const MomentStats a = gaussian(standard_normal(rng, d, 1), va.asDiagonal());
  const MomentStats b = gaussian(standard_normal(rng, d, 1), vb.asDiagonal());
  const double expected =
      (a.mean - b.mean).squaredNorm() + (va.array().sqrt() - vb.array().sqrt()).square().sum();
  EXPECT_NEAR(frechet_gaussian(a, b), expected, 1e-9 * expected);
}

TEST(Frechet, SymmetricAndNonNegative) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const MomentStats a = gaussian(standard_normal(rng, 8, 1), random_spd(8, rng));
    const MomentStats b = gaussian(standard_normal(rng, 8, 1), random_spd(8, rng));
    const double ab = frechet_gaussian(a, b);
    EXPECT_NEAR(ab, frechet_gaussian(b, a), 1e-9 * (1 + ab));
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(frechet_gaussian(a, a), 0.0, 1e-9);
  }
  EXPECT_THROW(frechet_gaussian(gaussian1d(0, 1), MomentStats::isotropic_gaussian(2, 1.0)), ShapeError);
}

TEST(Sqrtm, ReconstructsAndRejectsBadInput) {
  Rng rng(3);
  const Eigen::MatrixXd m = random_spd(32, rng);
  const Eigen::MatrixXd s = sqrtm_psd(m);
  EXPECT_LE((s * s - m).norm(), 1e-8 * m.norm());
  EXPECT_LE((s - s.transpose()).norm(), 1e-12 * s.norm());

  Eigen::MatrixXd asym = m;
  asym(0, 1) += 1e-3;
  EXPECT_THROW(sqrtm_psd(asym), DomainError);
  EXPECT_THROW(sqrtm_psd(-m), DomainError);
  EXPECT_THROW(sqrtm_psd(Eigen::MatrixXd::Zero(2, 3)), ShapeError);
  // Rank-deficient PSD input is fine.
  const Eigen::VectorXd u = standard_normal(rng, 5, 1);
  const Eigen::MatrixXd r1 = u * u.transpose();
  EXPECT_LE((sqrtm_psd(r1) * sqrtm_psd(r1) - r1).norm(), 1e-8 * r1.norm());
}

TEST(Moments, MergeEqualsPooled) {
  Rng rng(4);
  const Eigen::MatrixXd x = standard_normal(rng, 3, 100);
  const MomentStats all = MomentStats::from_samples(x);
  const MomentStats merged =
      MomentStats::merge(MomentStats::from_samples(x.leftCols(37)), MomentStats::from_samples(x.rightCols(63)));
  EXPECT_EQ(merged.count, 100);
  EXPECT_TRUE(merged.mean.isApprox(all.mean, 1e-12));
  EXPECT_TRUE(merged.cov.isApprox(all.cov, 1e-12));
}

TEST(Fld, TracksExactSamplesNearNoiseFloor) {
  // Checkpoints holding exact N(0, I) samples: FLD is pure sampling noise,
  // roughly D^2 / (4n) + D / n.
  Trajectory tr;
  tr.dim = 16;
  tr.n_particles = 4096;
  tr.requested_times = tr.times = {0.5, 1.0};
  Rng rng(5);
  tr.states = {standard_normal(rng, 16, 4096), standard_normal(rng, 16, 4096)};
  const FldReport r = track_fld(tr, MomentStats::isotropic_gaussian(16, 1.0), "N(0, I)");
  ASSERT_EQ(r.values.size(), 2u);
  for (double v : r.values) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 3 * (16.0 * 16.0 / (4 * 4096) + 16.0 / 4096));
  }
  EXPECT_TRUE(r.warnings.empty());
  ASSERT_EQ(r.std_errors.size(), 2u);
  for (double se : r.std_errors) {
    EXPECT_GT(se, 0.0);
    EXPECT_LT(se, r.values[0]);
  }
  const double floor = split_half_noise_floor(tr.states[0]);
  EXPECT_GT(floor, 0.0);
  EXPECT_LT(floor, 0.2);
}

TEST(Fld, SmallBatchesAreShrunkWithAWarning) {
  Trajectory tr;
  tr.dim = 8;
  tr.n_particles = 4;
  tr.requested_times = tr.times = {1.0};
  Rng rng(6);
  tr.states = {standard_normal(rng, 8, 4)};
  const FldReport r = track_fld(tr, MomentStats::isotropic_gaussian(8, 1.0), "N(0, I)");
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_TRUE(std::isfinite(r.values[0]));
}

TEST(Fld, LagImprovement) {
  FldReport base;
  base.times = {0.5, 1.0};
  base.values = {2.0, 1.0};
  base.reference = "ref";
  FldReport corr = base;
  corr.values = {1.0, 1.5};
  const auto d = lag_improvement(base, corr);
  EXPECT_DOUBLE_EQ(d[0], 0.5);
  EXPECT_DOUBLE_EQ(d[1], -0.5);
  FldReport other = corr;
  other.times = {0.4, 1.0};
  EXPECT_THROW(lag_improvement(base, other), ShapeError);
  other = corr;
  other.reference = "different";
  EXPECT_THROW(lag_improvement(base, other), ShapeError);
}

TEST(NormProfile, OracleProfileMatchesClosedForm) {
  // ||v*|| = |c(t)| ||x_t|| and E||x_t|| ~ s(t) sqrt(D).
  const GaussianFlowSpec spec{64, 1.0};
  const Interpolant p(PathKind::Linear);
  const GaussianOracleField field(spec, p);
  const std::vector<double> grid{0.0, 0.1, 0.5, 0.9, 1.0};
  const NormProfile prof = norm_profile(
      field, p, [](int n, Rng& rng) { return standard_normal(rng, 64, n); }, grid, 4000, 9);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto c = p.coefficients(grid[i]);
    const double expected = std::abs(oracle_coefficient(spec, p, grid[i])) *
                            std::sqrt(spec.marginal_variance(c) * 64);
    EXPECT_NEAR(prof.mean[i], expected, 0.02 * (1 + expected)) << grid[i];
    EXPECT_NEAR(prof.target_norm[i], std::sqrt(128.0), 0.2);
  }
  EXPECT_THROW(norm_profile(field, p, [](int n, Rng& rng) { return standard_normal(rng, 64, n); },
                            grid, kMinProfileSamples - 1, 0),
               ConfigError);
}
