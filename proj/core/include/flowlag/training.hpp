#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "flowlag/checkpoint.hpp"
#include "flowlag/dataset.hpp"
#include "flowlag/interpolant.hpp"
#include "flowlag/nn.hpp"
#include "flowlag/velocity_field.hpp"

namespace flowlag {

enum class LossKind { Fm, Mafm };
enum class MafmShape { Linear, Cosine, QuadIn, QuadOut };
// What the MAFM magnitude term regresses ||v|| onto.
enum class MagnitudeTarget { EndpointDifference, TargetVelocity };

LossKind parse_loss_kind(std::string_view name);
std::string to_string(LossKind kind);
MafmShape parse_mafm_shape(std::string_view name);
std::string to_string(MafmShape shape);
MagnitudeTarget parse_magnitude_target(std::string_view name);
std::string to_string(MagnitudeTarget target);

// Cosine: lr * (1 + cos(pi (step - 1) / steps)) / 2 for steps 1..steps.
enum class LrSchedule { Constant, Cosine };

LrSchedule parse_lr_schedule(std::string_view name);
std::string to_string(LrSchedule schedule);
double scheduled_learning_rate(LrSchedule schedule, double base, std::int64_t step,
                               std::int64_t steps);

inline constexpr double kDefaultLambda0 = 0.2;

// lambda(t) for the MAFM penalty. Every shape vanishes at t = 1 and integrates
// to lambda0 / 2 over [0, 1]:
//   linear   lambda0 (1 - t)
//   cosine   lambda0 (1 + cos(pi t)) / 2
//   quad-in  (3 lambda0 / 4) (1 - t^2)
//   quad-out (3 lambda0 / 2) (1 - t)^2
double mafm_weight(double t, MafmShape shape, double lambda0);

struct MafmOptions {
  double lambda0 = kDefaultLambda0;
  MafmShape shape = MafmShape::Linear;
  MagnitudeTarget magnitude_target = MagnitudeTarget::EndpointDifference;
};

// Independently coupled training batch; column j of x0/x1 pairs with t[j].
struct Batch {
  Eigen::MatrixXd x0;
  Eigen::MatrixXd x1;
  std::vector<double> t;

  int size() const { return static_cast<int>(t.size()); }
};

struct LossValue {
  double total = 0.0;
  double fm_term = 0.0;
  double magnitude_term = 0.0;
};

// Mean over the batch of ||v(x_t, t) - v_target||^2. If grads is non-null it
// receives dLoss/dParameters.
template <typename Scalar>
LossValue fm_loss(const Mlp<Scalar>& net, const Interpolant& interp, const Batch& batch,
                  MlpParameters<Scalar>* grads = nullptr);

// fm_loss plus the batch mean of lambda(t) (||v|| - m)^2, with m = ||x1 - x0||
// by default. At v = 0 the norm's subgradient is taken as 0.
template <typename Scalar>
LossValue mafm_loss(const Mlp<Scalar>& net, const Interpolant& interp, const Batch& batch,
                    const MafmOptions& options, MlpParameters<Scalar>* grads = nullptr);

struct TrainConfig {
  DatasetSpec dataset;
  PathKind path = PathKind::Linear;
  int batch_size = 256;
  int steps = 20000;
  double learning_rate = 1e-3;
  LossKind loss = LossKind::Fm;
  MafmOptions mafm;
  std::uint64_t seed = 0;
  Precision precision = Precision::Float32;
  std::vector<int> hidden{256, 256, 256};
  Activation activation = Activation::Softplus;
  TimeEmbedding embedding;
  LrSchedule lr_schedule = LrSchedule::Constant;
  int log_every = 100;
  int profile_every = 0;  // 0 disables periodic norm profiles

  void validate() const;
  MlpConfig network_config() const;
};

// Strict parse: unknown fields and wrong types raise ConfigError naming the field.
TrainConfig parse_train_config(std::string_view json_text);
// Canonical JSON (sorted keys, every field present).
std::string to_json(const TrainConfig& config);

struct LossRecord {
  std::int64_t step = 0;
  LossValue loss;
};

struct TrainHooks {
  std::function<void(const LossRecord&)> on_log;
  std::function<void(std::int64_t step, const VelocityField& field)> on_profile;
  // Where to write a checkpoint if training diverges; empty disables.
  std::string divergence_snapshot_path;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossRecord> losses;  // one record per log_every steps (window means)
};

// Draws the batch for one step. Noise, data and times come from three
// separately seeded streams and are paired by position only.
class BatchSampler {
 public:
  BatchSampler(const Dataset& data, std::uint64_t seed);
  Batch next(int batch_size);
  std::string serialize_state() const;

 private:
  const Dataset* data_;
  Rng noise_rng_;
  Rng data_rng_;
  Rng time_rng_;
};

// Throws NumericError (after writing the divergence snapshot) if the loss
// becomes non-finite.
TrainResult train(const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace flowlag
