#include "flowlag/training.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "flowlag/errors.hpp"
#include "json_fields.hpp"

namespace flowlag {

LossKind parse_loss_kind(std::string_view name) {
  if (name == "fm") return LossKind::Fm;
  if (name == "mafm") return LossKind::Mafm;
  throw ConfigError("unknown loss '" + std::string(name) + "' (expected fm|mafm)");
}

std::string to_string(LossKind kind) { return kind == LossKind::Fm ? "fm" : "mafm"; }

MafmShape parse_mafm_shape(std::string_view name) {
  if (name == "linear") return MafmShape::Linear;
  if (name == "cosine") return MafmShape::Cosine;
  if (name == "quad-in") return MafmShape::QuadIn;
  if (name == "quad-out") return MafmShape::QuadOut;
  throw ConfigError("unknown MAFM shape '" + std::string(name) +
                    "' (expected linear|cosine|quad-in|quad-out)");
}

std::string to_string(MafmShape shape) {
  switch (shape) {
    case MafmShape::Linear: return "linear";
    case MafmShape::Cosine: return "cosine";
    case MafmShape::QuadIn: return "quad-in";
    case MafmShape::QuadOut: return "quad-out";
  }
  return "?";
}

MagnitudeTarget parse_magnitude_target(std::string_view name) {
  if (name == "endpoint-difference") return MagnitudeTarget::EndpointDifference;
  if (name == "target-velocity") return MagnitudeTarget::TargetVelocity;
  throw ConfigError("unknown magnitude target '" + std::string(name) +
                    "' (expected endpoint-difference|target-velocity)");
}

std::string to_string(MagnitudeTarget target) {
  return target == MagnitudeTarget::EndpointDifference ? "endpoint-difference"
                                                       : "target-velocity";
}

LrSchedule parse_lr_schedule(std::string_view name) {
  if (name == "constant") return LrSchedule::Constant;
  if (name == "cosine") return LrSchedule::Cosine;
  throw ConfigError("unknown lr_schedule '" + std::string(name) + "' (expected constant|cosine)");
}

std::string to_string(LrSchedule schedule) {
  return schedule == LrSchedule::Constant ? "constant" : "cosine";
}

double scheduled_learning_rate(LrSchedule schedule, double base, std::int64_t step,
                               std::int64_t steps) {
  if (step < 1 || step > steps) throw DomainError("scheduled_learning_rate: step out of range");
  if (schedule == LrSchedule::Constant) return base;
  const double frac = static_cast<double>(step - 1) / static_cast<double>(steps);
  return 0.5 * base * (1.0 + std::cos(std::numbers::pi * frac));
}

double mafm_weight(double t, MafmShape shape, double lambda0) {
  check_unit_time(t);
  if (!(lambda0 >= 0.0)) throw ConfigError("lambda0 must be non-negative");
  const double s = 1.0 - t;
  switch (shape) {
    case MafmShape::Linear: return lambda0 * s;
    case MafmShape::Cosine: return lambda0 * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
    case MafmShape::QuadIn: return 0.75 * lambda0 * (1.0 - t * t);
    case MafmShape::QuadOut: return 1.5 * lambda0 * s * s;
  }
  throw ConfigError("unknown MAFM shape");
}

// ---------------------------------------------------------------------------
// Losses

namespace {

template <typename Scalar>
LossValue loss_impl(const Mlp<Scalar>& net, const Interpolant& interp, const Batch& batch,
                    const MafmOptions* mafm, MlpParameters<Scalar>* grads) {
  const int n = batch.size();
  if (n == 0) throw ConfigError("loss: empty batch");
  const int d = net.dim();
  if (batch.x0.rows() != d || batch.x1.rows() != d || batch.x0.cols() != n ||
      batch.x1.cols() != n)
    throw ShapeError("loss: batch shape does not match network dimension");

  Eigen::MatrixXd xt(d, n);
  Eigen::MatrixXd target(d, n);
  for (int j = 0; j < n; ++j) {
    const auto c = interp.coefficients(batch.t[static_cast<std::size_t>(j)]);
    xt.col(j) = c.alpha * batch.x1.col(j) + c.sigma * batch.x0.col(j);
    target.col(j) = c.d_alpha * batch.x1.col(j) + c.d_sigma * batch.x0.col(j);
  }

  typename Mlp<Scalar>::Cache cache;
  const Eigen::MatrixXd v =
      net.forward(xt.template cast<Scalar>(), batch.t, grads ? &cache : nullptr)
          .template cast<double>();

  const Eigen::MatrixXd diff = v - target;
  LossValue loss;
  loss.fm_term = diff.colwise().squaredNorm().sum() / n;
  Eigen::MatrixXd grad_out = (2.0 / n) * diff;

  if (mafm) {
    double magnitude = 0.0;
    for (int j = 0; j < n; ++j) {
      const double t = batch.t[static_cast<std::size_t>(j)];
      const double w = mafm_weight(t, mafm->shape, mafm->lambda0);
      const double want = mafm->magnitude_target == MagnitudeTarget::EndpointDifference
                              ? (batch.x1.col(j) - batch.x0.col(j)).norm()
                              : target.col(j).norm();
      const double have = v.col(j).norm();
      const double r = have - want;
      magnitude += w * r * r;
      if (have > 0.0) grad_out.col(j) += (2.0 * w * r / (n * have)) * v.col(j);
    }
    loss.magnitude_term = magnitude / n;
  }
  loss.total = loss.fm_term + loss.magnitude_term;

  if (grads) *grads = net.backward(cache, grad_out.template cast<Scalar>());
  return loss;
}

}  // namespace

template <typename Scalar>
LossValue fm_loss(const Mlp<Scalar>& net, const Interpolant& interp, const Batch& batch,
                  MlpParameters<Scalar>* grads) {
  return loss_impl(net, interp, batch, nullptr, grads);
}

template <typename Scalar>
LossValue mafm_loss(const Mlp<Scalar>& net, const Interpolant& interp, const Batch& batch,
                    const MafmOptions& options, MlpParameters<Scalar>* grads) {
  return loss_impl(net, interp, batch, &options, grads);
}

template LossValue fm_loss(const Mlp<float>&, const Interpolant&, const Batch&,
                           MlpParameters<float>*);
template LossValue fm_loss(const Mlp<double>&, const Interpolant&, const Batch&,
                           MlpParameters<double>*);
template LossValue mafm_loss(const Mlp<float>&, const Interpolant&, const Batch&,
                             const MafmOptions&, MlpParameters<float>*);
template LossValue mafm_loss(const Mlp<double>&, const Interpolant&, const Batch&,
                             const MafmOptions&, MlpParameters<double>*);

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
  dataset.validate();
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(mafm.lambda0 >= 0.0)) throw ConfigError("lambda0 must be >= 0");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  if (profile_every < 0) throw ConfigError("profile_every must be >= 0");
  network_config().validate();
}

MlpConfig TrainConfig::network_config() const {
  MlpConfig c;
  c.dim = Dataset(dataset).dim();
  c.hidden = hidden;
  c.activation = activation;
  c.embedding = embedding;
  return c;
}

TrainConfig parse_train_config(std::string_view json_text) {
  const auto j = detail::parse_json_text(json_text);
  detail::StrictObject root(j, "");
  TrainConfig c;

  auto ds = root.object("dataset");
  c.dataset.kind = parse_dataset_kind(ds.required<std::string>("kind"));
  const bool planar =
      c.dataset.kind == DatasetKind::Checkerboard || c.dataset.kind == DatasetKind::TwoMoons;
  c.dataset.dim = planar ? ds.optional<int>("dim", 2) : ds.required<int>("dim");
  c.dataset.data_std = ds.optional<double>("data_std", 1.0);
  c.dataset.components = ds.optional<int>("components", 8);
  ds.finish();

  c.path = parse_path_kind(root.required<std::string>("path"));
  c.loss = parse_loss_kind(root.required<std::string>("loss"));
  c.steps = root.required<int>("steps");
  c.seed = root.required<std::uint64_t>("seed");
  c.batch_size = root.optional<int>("batch_size", c.batch_size);
  c.learning_rate = root.optional<double>("learning_rate", c.learning_rate);
  c.mafm.lambda0 = root.optional<double>("lambda0", c.mafm.lambda0);
  c.mafm.shape = parse_mafm_shape(root.optional<std::string>("mafm_shape", "linear"));
  c.mafm.magnitude_target = parse_magnitude_target(
      root.optional<std::string>("magnitude_target", "endpoint-difference"));
  c.precision = parse_precision(root.optional<std::string>("precision", "float32"));
  c.hidden = root.optional<std::vector<int>>("hidden", c.hidden);
  c.activation = parse_activation(root.optional<std::string>("activation", "softplus"));
  if (root.has("time_embedding")) {
    auto te = root.object("time_embedding");
    c.embedding.n_frequencies = te.optional<int>("n_frequencies", c.embedding.n_frequencies);
    c.embedding.base_frequency = te.optional<double>("base_frequency", c.embedding.base_frequency);
    te.finish();
  }
  c.lr_schedule = parse_lr_schedule(root.optional<std::string>("lr_schedule", "constant"));
  c.log_every = root.optional<int>("log_every", c.log_every);
  c.profile_every = root.optional<int>("profile_every", c.profile_every);
  root.finish();
  c.validate();
  return c;
}

std::string to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["dataset"] = {{"kind", to_string(c.dataset.kind)},
                  {"dim", c.dataset.dim},
                  {"data_std", c.dataset.data_std},
                  {"components", c.dataset.components}};
  j["path"] = to_string(c.path);
  j["loss"] = to_string(c.loss);
  j["steps"] = c.steps;
  j["seed"] = c.seed;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["lambda0"] = c.mafm.lambda0;
  j["mafm_shape"] = to_string(c.mafm.shape);
  j["magnitude_target"] = to_string(c.mafm.magnitude_target);
  j["precision"] = to_string(c.precision);
  j["hidden"] = c.hidden;
  j["activation"] = to_string(c.activation);
  j["time_embedding"] = {{"n_frequencies", c.embedding.n_frequencies},
                         {"base_frequency", c.embedding.base_frequency}};
  j["lr_schedule"] = to_string(c.lr_schedule);
  j["log_every"] = c.log_every;
  j["profile_every"] = c.profile_every;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Training loop

BatchSampler::BatchSampler(const Dataset& data, std::uint64_t seed)
    : data_(&data),
      noise_rng_(make_rng(seed, "train/noise")),
      data_rng_(make_rng(seed, "train/data")),
      time_rng_(make_rng(seed, "train/time")) {}

Batch BatchSampler::next(int batch_size) {
  Batch b;
  b.x0 = standard_normal(noise_rng_, data_->dim(), batch_size);
  b.x1 = data_->sample(batch_size, data_rng_);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  b.t.resize(static_cast<std::size_t>(batch_size));
  for (auto& t : b.t) t = unit(time_rng_);
  return b;
}

std::string BatchSampler::serialize_state() const {
  return serialize_rng(noise_rng_) + "\n" + serialize_rng(data_rng_) + "\n" +
         serialize_rng(time_rng_);
}

namespace {

template <typename Scalar>
TrainResult train_impl(const TrainConfig& config, const TrainHooks& hooks) {
  const Dataset data(config.dataset);
  const Interpolant interp(config.path);
  Mlp<Scalar> net(config.network_config(), derive_seed(config.seed, "train/network"));
  auto opt = AdamState<Scalar>::for_parameters(net.parameters(), config.learning_rate);
  BatchSampler sampler(data, config.seed);
  const std::string metadata = to_json(config);

  TrainResult result;
  LossValue window{};
  int window_count = 0;
  MlpParameters<Scalar> grads;

  for (std::int64_t step = 1; step <= config.steps; ++step) {
    opt.learning_rate =
        scheduled_learning_rate(config.lr_schedule, config.learning_rate, step, config.steps);
    const Batch batch = sampler.next(config.batch_size);
    const LossValue loss = config.loss == LossKind::Fm
                               ? fm_loss(net, interp, batch, &grads)
                               : mafm_loss(net, interp, batch, config.mafm, &grads);
    bool diverged = !std::isfinite(loss.total);
    if (!diverged) {
      try {
        optimizer_step(opt, net.parameters(), grads);
      } catch (const NumericError&) {
        diverged = true;
      }
    }
    if (diverged) {
      if (!hooks.divergence_snapshot_path.empty()) {
        save_checkpoint(
            make_checkpoint(net, opt, sampler.serialize_state(), step, metadata),
            hooks.divergence_snapshot_path);
      }
      std::ostringstream os;
      os << "training diverged at step " << step << " (fm_term=" << loss.fm_term
         << ", magnitude_term=" << loss.magnitude_term << ")";
      throw NumericError(os.str());
    }

    window.total += loss.total;
    window.fm_term += loss.fm_term;
    window.magnitude_term += loss.magnitude_term;
    ++window_count;
    if (step % config.log_every == 0 || step == config.steps) {
      LossRecord rec;
      rec.step = step;
      rec.loss = {window.total / window_count, window.fm_term / window_count,
                  window.magnitude_term / window_count};
      result.losses.push_back(rec);
      if (hooks.on_log) hooks.on_log(rec);
      window = {};
      window_count = 0;
    }
    if (hooks.on_profile && config.profile_every > 0 &&
        (step % config.profile_every == 0 || step == config.steps)) {
      hooks.on_profile(step, NetworkField(net));
    }
  }

  result.checkpoint =
      make_checkpoint(net, opt, sampler.serialize_state(), config.steps, metadata);
  return result;
}

}  // namespace

TrainResult train(const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (config.precision == Precision::Float32) return train_impl<float>(config, hooks);
  return train_impl<double>(config, hooks);
}

}  // namespace flowlag
