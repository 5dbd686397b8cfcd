#include <gtest/gtest.h>

#include "flowlag/dataset.hpp"
#include "flowlag/errors.hpp"

using namespace flowlag;

TEST(Dataset, GaussianIsUntouched) {
  const Dataset d(DatasetSpec{DatasetKind::Gaussian, 5, 2.0, 8});
  ASSERT_TRUE(d.gaussian().has_value());
  EXPECT_EQ(d.gaussian()->data_std, 2.0);
  Rng rng(1);
  const Eigen::MatrixXd x = d.sample(200000, rng);
  EXPECT_LE(x.rowwise().mean().cwiseAbs().maxCoeff(), 0.03);
  const double var = x.squaredNorm() / static_cast<double>(x.size());
  EXPECT_NEAR(var, 4.0, 0.05);
}

// Property: every non-Gaussian kind is centred and inside the unit box for
// the bulk of its mass, for any seed.
TEST(Dataset, NormalizedKindsAreCentred) {
  for (DatasetKind kind : {DatasetKind::GaussianMixture, DatasetKind::Checkerboard, DatasetKind::TwoMoons}) {
    const Dataset d(DatasetSpec{kind, 3, 1.0, 6});
    EXPECT_FALSE(d.gaussian().has_value());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(seed);
      const Eigen::MatrixXd x = d.sample(50000, rng);
      EXPECT_EQ(x.rows(), d.dim());
      EXPECT_LE(x.rowwise().mean().cwiseAbs().maxCoeff(), 0.02) << to_string(kind);
      EXPECT_LE(x.cwiseAbs().maxCoeff(), 1.5) << to_string(kind);
      EXPECT_GT(x.cwiseAbs().maxCoeff(), 0.5) << to_string(kind);
    }
  }
}

TEST(Dataset, PlanarKindsAreTwoDimensional) {
  EXPECT_EQ(Dataset(DatasetSpec{DatasetKind::Checkerboard, 2, 1.0, 8}).dim(), 2);
  EXPECT_EQ(Dataset(DatasetSpec{DatasetKind::TwoMoons, 2, 1.0, 8}).dim(), 2);
}

TEST(Dataset, SameSeedSameSamples) {
  const Dataset d(DatasetSpec{DatasetKind::GaussianMixture, 4, 1.0, 5});
  Rng a(9), b(9);
  EXPECT_EQ(d.sample(10, a), d.sample(10, b));
}

TEST(Dataset, ParsesAndValidates) {
  EXPECT_EQ(parse_dataset_kind("two-moons"), DatasetKind::TwoMoons);
  EXPECT_THROW(parse_dataset_kind("mnist"), ConfigError);
  EXPECT_THROW((DatasetSpec{DatasetKind::Gaussian, 0, 1.0, 8}.validate()), ConfigError);
  EXPECT_THROW((DatasetSpec{DatasetKind::GaussianMixture, 4, 1.0, 0}.validate()), ConfigError);
}
