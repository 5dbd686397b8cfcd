#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>

namespace flowlag {

enum class PathKind { Linear, VP, GVP };

PathKind parse_path_kind(std::string_view name);
std::string to_string(PathKind kind);

struct PathCoefficients {
  double alpha;
  double sigma;
  double d_alpha;
  double d_sigma;
};

// Probability path x_t = alpha(t) * x1 + sigma(t) * x0 with t = 0 noise and
// t = 1 data. All three paths satisfy alpha(0) = 0, sigma(0) = 1,
// alpha(1) = 1, sigma(1) = 0 exactly and have finite derivatives on [0, 1].
//
//   linear  alpha = t, sigma = 1 - t
//   gvp     alpha = sin(pi t / 2), sigma = cos(pi t / 2)
//   vp      alpha = (m(t) - m(0)) / (1 - m(0)), sigma = sqrt(1 - alpha^2),
//           m(t) = exp(-a (1 - t)^2 / 4 - b (1 - t) / 2), a = 19.9, b = 0
//
// The VP path is the SBDM log-mean coefficient renormalized so the noise
// endpoint is exact; b = 0 keeps d_sigma finite at t = 1.
class Interpolant {
 public:
  static constexpr double kVpBetaMax = 19.9;
  static constexpr double kVpBetaMin = 0.0;

  explicit Interpolant(PathKind kind = PathKind::Linear) : kind_(kind) {}

  PathKind kind() const { return kind_; }

  // Throws DomainError if t is outside [0, 1].
  PathCoefficients coefficients(double t) const;

  // d_alpha(t) * x1 + d_sigma(t) * x0. Columns are samples.
  Eigen::MatrixXd target_velocity(const Eigen::Ref<const Eigen::MatrixXd>& x0,
                                  const Eigen::Ref<const Eigen::MatrixXd>& x1, double t) const;

  // alpha(t) * x1 + sigma(t) * x0. Columns are samples.
  Eigen::MatrixXd sample_xt(const Eigen::Ref<const Eigen::MatrixXd>& x0,
                            const Eigen::Ref<const Eigen::MatrixXd>& x1, double t) const;

 private:
  PathKind kind_;
};

// Throws DomainError unless 0 <= t <= 1 (NaN rejected).
void check_unit_time(double t, std::string_view what = "t");

}  // namespace flowlag
