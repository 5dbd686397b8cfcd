#include "flowlag/velocity_field.hpp"

#include <vector>

#include "flowlag/errors.hpp"

namespace flowlag {

GaussianOracleField::GaussianOracleField(GaussianFlowSpec spec, Interpolant interp)
    : spec_(spec), interp_(interp) {
  spec_.validate();
}

Eigen::MatrixXd GaussianOracleField::evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                              double t) const {
  return oracle_velocity(spec_, interp_, x, t);
}

Eigen::MatrixXd ConstantField::evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                        double t) const {
  check_unit_time(t);
  if (x.rows() != value_.size()) throw ShapeError("constant field: dimension mismatch");
  return value_.replicate(1, x.cols());
}

NetworkField NetworkField::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.precision == Precision::Float32)
    return NetworkField(restore_network<float>(ckpt));
  return NetworkField(restore_network<double>(ckpt));
}

int NetworkField::dim() const {
  return std::visit([](const auto& net) { return net.dim(); }, net_);
}

Eigen::MatrixXd NetworkField::evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                       double t) const {
  const std::vector<double> times(static_cast<std::size_t>(x.cols()), t);
  return std::visit(
      [&](const auto& net) -> Eigen::MatrixXd {
        using Scalar = typename std::decay_t<decltype(net)>::Matrix::Scalar;
        if constexpr (std::is_same_v<Scalar, double>) {
          return net.forward(x, times);
        } else {
          return net.forward(x.template cast<Scalar>(), times).template cast<double>();
        }
      },
      net_);
}

}  // namespace flowlag
