#include "flowlag/interpolant.hpp"

#include <cmath>
#include <numbers>

#include "flowlag/errors.hpp"

namespace flowlag {
namespace {

void check_same_shape(const Eigen::Ref<const Eigen::MatrixXd>& x0,
                      const Eigen::Ref<const Eigen::MatrixXd>& x1) {
  if (x0.rows() != x1.rows() || x0.cols() != x1.cols() || x0.rows() < 1)
    throw ShapeError("x0 and x1 must have the same nonempty shape");
}

PathCoefficients vp_coefficients(double t) {
  constexpr double a = Interpolant::kVpBetaMax;
  constexpr double b = Interpolant::kVpBetaMin;
  const double s = 1.0 - t;
  const double m0 = std::exp(-0.25 * a - 0.5 * b);
  const double norm = 1.0 - m0;
  const double exponent = -0.25 * a * s * s - 0.5 * b * s;
  const double m = std::exp(exponent);
  // 1 - m computed without cancellation so sigma stays accurate near t = 1.
  const double one_minus_m = -std::expm1(exponent);

  PathCoefficients c{};
  c.alpha = t == 0.0 ? 0.0 : (m - m0) / norm;
  const double one_minus_alpha = t == 0.0 ? 1.0 : one_minus_m / norm;
  c.sigma = std::sqrt(one_minus_alpha * (1.0 + c.alpha));
  c.d_alpha = m * (0.5 * a * s + 0.5 * b) / norm;
  if (c.sigma > 0.0) {
    c.d_sigma = -c.alpha * c.d_alpha / c.sigma;
  } else {
    // sigma ~ sqrt(a / (2 norm)) * (1 - t) as t -> 1 (b = 0).
    c.d_sigma = -std::sqrt(a / (2.0 * norm));
  }
  return c;
}

}  // namespace

PathKind parse_path_kind(std::string_view name) {
  if (name == "linear") return PathKind::Linear;
  if (name == "vp") return PathKind::VP;
  if (name == "gvp") return PathKind::GVP;
  throw ConfigError("unknown path '" + std::string(name) + "' (expected linear|vp|gvp)");
}

std::string to_string(PathKind kind) {
  switch (kind) {
    case PathKind::Linear: return "linear";
    case PathKind::VP: return "vp";
    case PathKind::GVP: return "gvp";
  }
  return "?";
}

void check_unit_time(double t, std::string_view what) {
  if (!(t >= 0.0 && t <= 1.0))
    throw DomainError(std::string(what) + " = " + std::to_string(t) + " outside [0, 1]");
}

PathCoefficients Interpolant::coefficients(double t) const {
  check_unit_time(t);
  switch (kind_) {
    case PathKind::Linear:
      return {t, 1.0 - t, 1.0, -1.0};
    case PathKind::GVP: {
      constexpr double half_pi = std::numbers::pi / 2.0;
      // Exact endpoints; sin(pi/2) and cos(pi/2) are not exact in floating point.
      const double alpha = t == 1.0 ? 1.0 : std::sin(half_pi * t);
      const double sigma = t == 1.0 ? 0.0 : std::cos(half_pi * t);
      return {alpha, sigma, half_pi * (t == 1.0 ? 0.0 : std::cos(half_pi * t)),
              -half_pi * alpha};
    }
    case PathKind::VP:
      return vp_coefficients(t);
  }
  throw DomainError("invalid path kind");
}

Eigen::MatrixXd Interpolant::target_velocity(const Eigen::Ref<const Eigen::MatrixXd>& x0,
                                             const Eigen::Ref<const Eigen::MatrixXd>& x1,
                                             double t) const {
  check_same_shape(x0, x1);
  const auto c = coefficients(t);
  return c.d_alpha * x1 + c.d_sigma * x0;
}

Eigen::MatrixXd Interpolant::sample_xt(const Eigen::Ref<const Eigen::MatrixXd>& x0,
                                       const Eigen::Ref<const Eigen::MatrixXd>& x1,
                                       double t) const {
  check_same_shape(x0, x1);
  const auto c = coefficients(t);
  return c.alpha * x1 + c.sigma * x0;
}

}  // namespace flowlag
