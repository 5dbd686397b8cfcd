#include "flowlag/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flowlag/errors.hpp"

namespace flowlag {

SolverMethod parse_solver_method(std::string_view name) {
  if (name == "euler") return SolverMethod::Euler;
  if (name == "heun") return SolverMethod::Heun;
  if (name == "euler-maruyama" || name == "em") return SolverMethod::EulerMaruyama;
  throw ConfigError("unknown solver '" + std::string(name) + "' (expected euler|heun|euler-maruyama)");
}

std::string to_string(SolverMethod method) {
  switch (method) {
    case SolverMethod::Euler: return "euler";
    case SolverMethod::Heun: return "heun";
    case SolverMethod::EulerMaruyama: return "euler-maruyama";
  }
  return "?";
}

void SolverSpec::validate() const {
  if (nfe < 1) throw ConfigError("solver: nfe must be >= 1");
  schedule.validate();
  if (!(diffusion_scale >= 0.0)) throw ConfigError("solver: diffusion_scale must be >= 0");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (!(checkpoints[i] >= 0.0 && checkpoints[i] <= 1.0))
      throw ConfigError("solver: checkpoint times must lie in [0, 1]");
    if (i > 0 && checkpoints[i] < checkpoints[i - 1])
      throw ConfigError("solver: checkpoint times must be sorted");
  }
}

namespace {

void check_step(double t, double dt) {
  check_unit_time(t, "t");
  // Tolerate round-off in accumulated grid times.
  if (!(t + dt <= 1.0 + 1e-12) || !(t + dt >= -1e-12))
    throw DomainError("step leaves [0, 1]: t = " + std::to_string(t) + ", dt = " + std::to_string(dt));
}

double clamp_unit(double t) { return std::clamp(t, 0.0, 1.0); }

void check_finite(const Eigen::MatrixXd& v, const Eigen::Ref<const Eigen::MatrixXd>& x, double t) {
  if (v.allFinite()) return;
  std::ostringstream os;
  os << "non-finite velocity at t = " << t << "; state dump (first particle): [";
  const Eigen::Index n = std::min<Eigen::Index>(x.rows(), 8);
  for (Eigen::Index i = 0; i < n && x.cols() > 0; ++i) os << (i ? ", " : "") << x(i, 0);
  if (x.rows() > n) os << ", ...";
  os << "], |x|_max = " << (x.size() ? x.cwiseAbs().maxCoeff() : 0.0);
  throw NumericError(os.str());
}

}  // namespace

Eigen::MatrixXd corrected_velocity(const VelocityField& field, const ScaleSchedule& schedule,
                                   const Eigen::Ref<const Eigen::MatrixXd>& x, double t) {
  Eigen::MatrixXd v = field.evaluate(x, t);
  check_finite(v, x, t);
  const double g = schedule.gamma(t);
  if (g != 1.0) v *= g;
  return v;
}

Eigen::MatrixXd euler_step(const VelocityField& field, const ScaleSchedule& schedule,
                           const Eigen::Ref<const Eigen::MatrixXd>& x, double t, double dt) {
  check_step(t, dt);
  return x + corrected_velocity(field, schedule, x, t) * dt;
}

Eigen::MatrixXd heun_step(const VelocityField& field, const ScaleSchedule& schedule,
                          const Eigen::Ref<const Eigen::MatrixXd>& x, double t, double dt) {
  check_step(t, dt);
  const double t_next = clamp_unit(t + dt);
  const Eigen::MatrixXd k1 = corrected_velocity(field, schedule, x, t);
  const Eigen::MatrixXd predictor = x + k1 * dt;
  const Eigen::MatrixXd k2 = corrected_velocity(field, schedule, predictor, t_next);
  return x + (k1 + k2) * (0.5 * dt);
}

Eigen::MatrixXd em_step(const VelocityField& field, const ScaleSchedule& schedule,
                        const Interpolant& interp, const Eigen::Ref<const Eigen::MatrixXd>& x,
                        double t, double dt, Rng& rng, double diffusion_scale) {
  check_step(t, dt);
  const double w = diffusion_scale * interp.coefficients(t).sigma;
  const Eigen::MatrixXd v = corrected_velocity(field, schedule, x, t);
  if (w == 0.0) return x + v * dt;

  const double ts = std::clamp(t, kScoreTimeMin, 1.0 - kScoreTimeMin);
  const auto c = interp.coefficients(ts);
  const double denom = c.sigma * (c.d_alpha * c.sigma - c.alpha * c.d_sigma);
  if (!(std::abs(denom) > 0.0)) throw NumericError("em_step: degenerate score conversion");
  const Eigen::MatrixXd score = (c.alpha * v - c.d_alpha * x) / denom;

  Eigen::MatrixXd noise = standard_normal(rng, x.rows(), x.cols());
  return x + (v + (0.5 * w) * score) * dt + std::sqrt(w * dt) * noise;
}

Trajectory integrate_from(const VelocityField& field, const SolverSpec& spec,
                          const Interpolant& interp, Eigen::MatrixXd initial,
                          std::uint64_t seed) {
  spec.validate();
  if (initial.rows() != field.dim()) throw ShapeError("integrate: initial state dimension mismatch");

  Trajectory traj;
  traj.dim = static_cast<int>(initial.rows());
  traj.n_particles = static_cast<int>(initial.cols());
  traj.seed = seed;
  traj.requested_times = spec.checkpoints;

  std::vector<int> snap;
  for (double c : spec.checkpoints) {
    snap.push_back(static_cast<int>(std::lround(c * spec.nfe)));
    traj.times.push_back(static_cast<double>(snap.back()) / spec.nfe);
  }

  Rng sde_rng = make_rng(seed, "sample/sde");
  const double dt = 1.0 / spec.nfe;
  Eigen::MatrixXd x = std::move(initial);
  std::size_t next = 0;
  auto record = [&](int k) {
    while (next < snap.size() && snap[next] == k) {
      traj.states.push_back(x);
      ++next;
    }
  };
  record(0);
  for (int k = 0; k < spec.nfe; ++k) {
    const double t = static_cast<double>(k) / spec.nfe;
    switch (spec.method) {
      case SolverMethod::Euler: x = euler_step(field, spec.schedule, x, t, dt); break;
      case SolverMethod::Heun: x = heun_step(field, spec.schedule, x, t, dt); break;
      case SolverMethod::EulerMaruyama:
        x = em_step(field, spec.schedule, interp, x, t, dt, sde_rng, spec.diffusion_scale);
        break;
    }
    record(k + 1);
  }
  return traj;
}

Trajectory integrate(const VelocityField& field, const SolverSpec& spec,
                     const Interpolant& interp, int n_particles, std::uint64_t seed) {
  if (n_particles < 1) throw ConfigError("integrate: n_particles must be >= 1");
  Rng init_rng = make_rng(seed, "sample/init");
  return integrate_from(field, spec, interp, standard_normal(init_rng, field.dim(), n_particles),
                        seed);
}

}  // namespace flowlag
