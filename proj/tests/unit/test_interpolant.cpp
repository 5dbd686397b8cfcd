#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "flowlag/errors.hpp"
#include "flowlag/interpolant.hpp"

using namespace flowlag;

namespace {

const PathKind kAllPaths[] = {PathKind::Linear, PathKind::VP, PathKind::GVP};

}  // namespace

TEST(Interpolant, EndpointsAreExact) {
  for (PathKind kind : kAllPaths) {
    const Interpolant p(kind);
    const auto c0 = p.coefficients(0.0);
    const auto c1 = p.coefficients(1.0);
    EXPECT_EQ(c0.alpha, 0.0) << to_string(kind);
    EXPECT_EQ(c0.sigma, 1.0) << to_string(kind);
    EXPECT_EQ(c1.alpha, 1.0) << to_string(kind);
    EXPECT_EQ(c1.sigma, 0.0) << to_string(kind);
    EXPECT_TRUE(std::isfinite(c0.d_alpha) && std::isfinite(c0.d_sigma));
    EXPECT_TRUE(std::isfinite(c1.d_alpha) && std::isfinite(c1.d_sigma));
  }
}

TEST(Interpolant, DerivativesMatchCentralDifferences) {
  const double h = 1e-6;
  for (PathKind kind : kAllPaths) {
    const Interpolant p(kind);
    for (double t = 0.01; t < 0.995; t += 0.0437) {
      const auto c = p.coefficients(t);
      const auto up = p.coefficients(t + h);
      const auto dn = p.coefficients(t - h);
      EXPECT_NEAR(c.d_alpha, (up.alpha - dn.alpha) / (2 * h), 1e-6 * (1 + std::abs(c.d_alpha)))
          << to_string(kind) << " t=" << t;
      EXPECT_NEAR(c.d_sigma, (up.sigma - dn.sigma) / (2 * h), 1e-6 * (1 + std::abs(c.d_sigma)))
          << to_string(kind) << " t=" << t;
    }
  }
}

TEST(Interpolant, VariancePreservingPathsStayOnUnitCircle) {
  for (PathKind kind : {PathKind::VP, PathKind::GVP}) {
    const Interpolant p(kind);
    for (double t = 0.0; t <= 1.0; t += 0.01) {
      const auto c = p.coefficients(t);
      EXPECT_NEAR(c.alpha * c.alpha + c.sigma * c.sigma, 1.0, 1e-14);
    }
  }
}

TEST(Interpolant, VpFrozenValues) {
  // Computed with 30-digit arithmetic from m(t) = exp(-19.9 (1 - t)^2 / 4).
  const Interpolant p(PathKind::VP);
  struct Row {
    double t, alpha, sigma, d_alpha, d_sigma;
  };
  const Row rows[] = {
      {0.25, 0.054372265504343729, 0.99852073425839543, 0.45766649908708357, -0.024921229521876772},
      {0.5, 0.28335006969707172, 0.95901654730388495, 1.4442755752502108, -0.42672421665655631},
      {0.9, 0.95112963977605092, 0.30879185277380556, 0.95329578727862625, -2.9363076473993733},
  };
  for (const auto& r : rows) {
    const auto c = p.coefficients(r.t);
    EXPECT_NEAR(c.alpha, r.alpha, 1e-14);
    EXPECT_NEAR(c.sigma, r.sigma, 1e-14);
    EXPECT_NEAR(c.d_alpha, r.d_alpha, 1e-12);
    EXPECT_NEAR(c.d_sigma, r.d_sigma, 1e-12);
  }
  EXPECT_NEAR(p.coefficients(1.0).d_sigma, -3.1653148274720728, 1e-12);
  EXPECT_NEAR(p.coefficients(0.0).d_alpha, 0.06921795701455799, 1e-14);
}

TEST(Interpolant, LinearAndGvpClosedForms) {
  const Interpolant lin(PathKind::Linear);
  const Interpolant gvp(PathKind::GVP);
  for (double t : {0.0, 0.3, 0.7, 1.0}) {
    const auto l = lin.coefficients(t);
    EXPECT_DOUBLE_EQ(l.alpha, t);
    EXPECT_DOUBLE_EQ(l.sigma, 1 - t);
    EXPECT_EQ(l.d_alpha, 1.0);
    EXPECT_EQ(l.d_sigma, -1.0);
    const auto g = gvp.coefficients(t);
    EXPECT_NEAR(g.alpha, std::sin(M_PI * t / 2), 1e-15);
    EXPECT_NEAR(g.sigma, std::cos(M_PI * t / 2), 1e-15);
    EXPECT_NEAR(g.d_alpha, M_PI / 2 * std::cos(M_PI * t / 2), 1e-15);
    EXPECT_NEAR(g.d_sigma, -M_PI / 2 * std::sin(M_PI * t / 2), 1e-15);
  }
}

TEST(Interpolant, RejectsTimesOutsideUnitInterval) {
  const Interpolant p;
  EXPECT_THROW(p.coefficients(-1e-12), DomainError);
  EXPECT_THROW(p.coefficients(1.0 + 1e-12), DomainError);
  EXPECT_THROW(p.coefficients(std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST(Interpolant, SampleAndTargetVelocity) {
  const Interpolant p(PathKind::GVP);
  Eigen::MatrixXd x0(2, 3), x1(2, 3);
  x0 << 1, 2, 3, 4, 5, 6;
  x1 << -1, 0, 1, 2, 3, 4;
  const double t = 0.37;
  const auto c = p.coefficients(t);
  EXPECT_TRUE(p.sample_xt(x0, x1, t).isApprox(c.alpha * x1 + c.sigma * x0, 1e-15));
  EXPECT_TRUE(p.target_velocity(x0, x1, t).isApprox(c.d_alpha * x1 + c.d_sigma * x0, 1e-15));
  EXPECT_THROW(p.sample_xt(x0, x1.leftCols(2), t), ShapeError);
  EXPECT_THROW(p.target_velocity(x0.topRows(1), x1, t), ShapeError);
}

TEST(Interpolant, ParsesNames) {
  EXPECT_EQ(parse_path_kind("vp"), PathKind::VP);
  EXPECT_EQ(to_string(parse_path_kind("gvp")), "gvp");
  EXPECT_THROW(parse_path_kind("cosine"), ConfigError);
}
