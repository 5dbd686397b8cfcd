#include <cmath>
#include <filesystem>
#include <limits>

#include <gtest/gtest.h>

#include "flowlag/errors.hpp"
#include "flowlag/gaussian_oracle.hpp"
#include "flowlag/solver.hpp"

using namespace flowlag;

namespace {

// For the Gaussian oracle the exact flow is x(t) = s(t) / s(0) x(0), with
// s(t)^2 the marginal variance, since the field is linear and preserves the
// Gaussian marginals.
double terminal_error(SolverMethod method, int nfe) {
  const GaussianFlowSpec spec{2, 2.0};
  const Interpolant p(PathKind::GVP);
  const GaussianOracleField field(spec, p);
  SolverSpec s;
  s.method = method;
  s.nfe = nfe;
  s.checkpoints = {1.0};
  Eigen::MatrixXd x0(2, 1);
  x0 << 1.0, -0.5;
  const Trajectory tr = integrate_from(field, s, p, x0, 0);
  return (tr.states.back() - 2.0 * x0).norm();
}

double slope(SolverMethod m) {
  return std::log2(terminal_error(m, 32) / terminal_error(m, 64));
}

}  // namespace

TEST(Solver, ConvergenceOrders) {
  EXPECT_NEAR(slope(SolverMethod::Euler), 1.0, 0.15);
  EXPECT_NEAR(slope(SolverMethod::Heun), 2.0, 0.15);
}

TEST(Solver, ConstantFieldIsExact) {
  Eigen::VectorXd k(3);
  k << 1.0, -2.0, 0.5;
  const ConstantField field(k);
  SolverSpec s;
  s.nfe = 7;
  s.checkpoints = {1.0};
  for (SolverMethod m : {SolverMethod::Euler, SolverMethod::Heun}) {
    s.method = m;
    const Trajectory tr = integrate_from(field, s, Interpolant(), Eigen::MatrixXd::Zero(3, 2), 0);
    EXPECT_LE((tr.states.back().col(1) - k).norm(), 1e-14);
  }
}

TEST(Solver, UnitScheduleIsBitwiseIdentity) {
  const GaussianOracleField field({4, 1.5}, Interpolant(PathKind::VP));
  for (SolverMethod m : {SolverMethod::Euler, SolverMethod::Heun, SolverMethod::EulerMaruyama}) {
    SolverSpec plain;
    plain.method = m;
    plain.nfe = 13;
    SolverSpec unit = plain;
    unit.schedule = {ScheduleShape::Cosine, 1.0, 1.0};
    const Trajectory a = integrate(field, plain, Interpolant(PathKind::VP), 50, 3);
    const Trajectory b = integrate(field, unit, Interpolant(PathKind::VP), 50, 3);
    ASSERT_EQ(a.states.size(), b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k)
      EXPECT_TRUE((a.states[k].array() == b.states[k].array()).all()) << to_string(m);
  }
}

TEST(Solver, CorrectedVelocityScalesExactly) {
  const GaussianOracleField field({3, 1.0}, Interpolant());
  const ScaleSchedule s{ScheduleShape::QuadIn, 1.2, 1.0};
  Rng rng(1);
  const Eigen::MatrixXd x = standard_normal(rng, 3, 10);
  for (double t : {0.0, 0.2, 0.9}) {
    const Eigen::MatrixXd v = field.evaluate(x, t);
    EXPECT_TRUE((corrected_velocity(field, s, x, t).array() == (s.gamma(t) * v).array()).all());
  }
}

TEST(Solver, EulerMaruyamaWithoutDiffusionIsEuler) {
  const GaussianOracleField field({3, 1.0}, Interpolant(PathKind::GVP));
  const Interpolant p(PathKind::GVP);
  const ScaleSchedule s{ScheduleShape::Linear, 1.1, 1.0};
  Rng rng(2);
  const Eigen::MatrixXd x = standard_normal(rng, 3, 8);
  const Eigen::MatrixXd em = em_step(field, s, p, x, 0.3, 0.05, rng, 0.0);
  EXPECT_TRUE((em.array() == euler_step(field, s, x, 0.3, 0.05).array()).all());
}

TEST(Solver, EulerMaruyamaPreservesTerminalVariance) {
  const GaussianFlowSpec spec{4, 1.5};
  const Interpolant p(PathKind::Linear);
  const GaussianOracleField field(spec, p);
  SolverSpec s;
  s.method = SolverMethod::EulerMaruyama;
  s.nfe = 400;
  s.checkpoints = {1.0};
  const Trajectory tr = integrate(field, s, p, 20000, 4);
  const double var = tr.states.back().squaredNorm() / static_cast<double>(tr.states.back().size());
  EXPECT_NEAR(var, 2.25, 0.1);
}

TEST(Solver, CheckpointsSnapToGrid) {
  const ConstantField field(Eigen::VectorXd::Zero(1));
  SolverSpec s;
  s.nfe = 10;
  s.checkpoints = {0.24, 0.5, 1.0};
  const Trajectory tr = integrate(field, s, Interpolant(), 3, 0);
  EXPECT_EQ(tr.requested_times, s.checkpoints);
  EXPECT_DOUBLE_EQ(tr.times[0], 0.2);
  EXPECT_DOUBLE_EQ(tr.times[1], 0.5);
  EXPECT_DOUBLE_EQ(tr.times[2], 1.0);
}

TEST(Solver, NonFiniteVelocityIsReported) {
  Eigen::VectorXd k(2);
  k << 1.0, std::numeric_limits<double>::quiet_NaN();
  const ConstantField field(k);
  SolverSpec s;
  s.nfe = 3;
  EXPECT_THROW(integrate(field, s, Interpolant(), 2, 0), NumericError);
}

TEST(Solver, SpecValidation) {
  SolverSpec s;
  s.nfe = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.nfe = 5;
  s.checkpoints = {0.5, 0.2};
  EXPECT_THROW(s.validate(), ConfigError);
  s.checkpoints = {1.2};
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_EQ(parse_solver_method("em"), SolverMethod::EulerMaruyama);
  EXPECT_THROW(parse_solver_method("rk4"), ConfigError);
}

TEST(Trajectory, BinaryRoundTrip) {
  const GaussianOracleField field({3, 1.0}, Interpolant());
  SolverSpec s;
  s.nfe = 5;
  const Trajectory tr = integrate(field, s, Interpolant(), 4, 77);
  const std::string bytes = encode_trajectory(tr);
  EXPECT_EQ(bytes.substr(0, 8), "FLOWLAGT");
  EXPECT_EQ(bytes.size(), 8u + 4 * 4 + 8 + 8 * 5 + 4 * 5 * 4 * 3);
  const Trajectory back = decode_trajectory(bytes);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.times, tr.times);
  for (std::size_t k = 0; k < tr.states.size(); ++k)
    EXPECT_TRUE(back.states[k].isApprox(tr.states[k].cast<float>().cast<double>(), 0.0));
  EXPECT_THROW(decode_trajectory(bytes.substr(0, 30)), FormatError);

  const auto path = std::filesystem::temp_directory_path() / "flowlag_traj_test.bin";
  save_trajectory(tr, path.string());
  EXPECT_EQ(encode_trajectory(load_trajectory(path.string())), bytes);
  std::filesystem::remove(path);
}
