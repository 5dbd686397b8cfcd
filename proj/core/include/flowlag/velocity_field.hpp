#pragma once

#include <variant>

#include <Eigen/Core>

#include "flowlag/checkpoint.hpp"
#include "flowlag/gaussian_oracle.hpp"
#include "flowlag/interpolant.hpp"
#include "flowlag/nn.hpp"

namespace flowlag {

// Anything mapping (x, t) to a velocity. Columns of x are particles that share
// the same time t.
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual int dim() const = 0;
  virtual Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x, double t) const = 0;
};

class GaussianOracleField final : public VelocityField {
 public:
  GaussianOracleField(GaussianFlowSpec spec, Interpolant interp);
  int dim() const override { return spec_.dim; }
  Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x, double t) const override;

 private:
  GaussianFlowSpec spec_;
  Interpolant interp_;
};

// v(x, t) = k, independent of x and t.
class ConstantField final : public VelocityField {
 public:
  explicit ConstantField(Eigen::VectorXd value) : value_(std::move(value)) {}
  int dim() const override { return static_cast<int>(value_.size()); }
  Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x, double t) const override;

 private:
  Eigen::VectorXd value_;
};

// A trained network in either precision; states are converted at the boundary.
class NetworkField final : public VelocityField {
 public:
  explicit NetworkField(Mlp<float> net) : net_(std::move(net)) {}
  explicit NetworkField(Mlp<double> net) : net_(std::move(net)) {}
  static NetworkField from_checkpoint(const Checkpoint& ckpt);

  int dim() const override;
  Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x, double t) const override;

 private:
  std::variant<Mlp<float>, Mlp<double>> net_;
};

}  // namespace flowlag
