#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "flowlag/interpolant.hpp"
#include "flowlag/rng.hpp"
#include "flowlag/schedule.hpp"
#include "flowlag/velocity_field.hpp"

namespace flowlag {

enum class SolverMethod { Euler, Heun, EulerMaruyama };

SolverMethod parse_solver_method(std::string_view name);
std::string to_string(SolverMethod method);

// Lower clamp on t (and 1 - t) for the velocity-to-score conversion.
inline constexpr double kScoreTimeMin = 1e-3;

struct SolverSpec {
  SolverMethod method = SolverMethod::Euler;
  // Number of uniform steps on [0, 1]; Heun spends two evaluations per step.
  int nfe = 50;
  ScaleSchedule schedule;
  std::vector<double> checkpoints{0.2, 0.4, 0.6, 0.8, 1.0};
  // Diffusion weight w_t = diffusion_scale * sigma_t for Euler-Maruyama.
  double diffusion_scale = 1.0;

  void validate() const;
};

// The single place SSC is applied: gamma(t) * v(x, t).
Eigen::MatrixXd corrected_velocity(const VelocityField& field, const ScaleSchedule& schedule,
                                   const Eigen::Ref<const Eigen::MatrixXd>& x, double t);

// x + gamma(t) v(x, t) dt
Eigen::MatrixXd euler_step(const VelocityField& field, const ScaleSchedule& schedule,
                           const Eigen::Ref<const Eigen::MatrixXd>& x, double t, double dt);

// Predictor-corrector (explicit trapezoid); each stage uses gamma at its own time.
Eigen::MatrixXd heun_step(const VelocityField& field, const ScaleSchedule& schedule,
                          const Eigen::Ref<const Eigen::MatrixXd>& x, double t, double dt);

// Euler-Maruyama on dx = [v^ + w_t s / 2] dt + sqrt(w_t) dW with v^ = gamma v
// and the score s recovered from v^ through the interpolant:
//   s = (alpha v^ - d_alpha x) / (sigma (d_alpha sigma - alpha d_sigma)).
// The score coefficients use t clamped to [kScoreTimeMin, 1 - kScoreTimeMin].
// With w_t = 0 this is exactly euler_step.
Eigen::MatrixXd em_step(const VelocityField& field, const ScaleSchedule& schedule,
                        const Interpolant& interp, const Eigen::Ref<const Eigen::MatrixXd>& x,
                        double t, double dt, Rng& rng, double diffusion_scale = 1.0);

struct Trajectory {
  int dim = 0;
  int n_particles = 0;
  std::uint64_t seed = 0;
  std::vector<double> requested_times;
  std::vector<double> times;           // grid node each checkpoint snapped to
  std::vector<Eigen::MatrixXd> states;  // dim x n_particles per checkpoint
};

// Uniform grid t_k = k / nfe from t = 0 to t = 1. Each checkpoint time snaps
// to the nearest grid node. Initial particles are N(0, I) drawn from seed.
Trajectory integrate(const VelocityField& field, const SolverSpec& spec,
                     const Interpolant& interp, int n_particles, std::uint64_t seed);

Trajectory integrate_from(const VelocityField& field, const SolverSpec& spec,
                          const Interpolant& interp, Eigen::MatrixXd initial,
                          std::uint64_t seed);

// Binary container: "FLOWLAGT", u32 version, u32 dim, u32 n_particles,
// u32 n_checkpoints, u64 seed, f64 times[n_checkpoints], then per checkpoint
// n_particles x dim float32 (particle-major), all little-endian.
std::string encode_trajectory(const Trajectory& traj);
Trajectory decode_trajectory(std::string_view bytes);
void save_trajectory(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory(const std::string& path);

}  // namespace flowlag
