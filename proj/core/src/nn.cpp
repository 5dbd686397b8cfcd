#include "flowlag/nn.hpp"

#include <cmath>
#include <random>

#include "flowlag/errors.hpp"
#include "flowlag/rng.hpp"

namespace flowlag {

Activation parse_activation(std::string_view name) {
  if (name == "softplus") return Activation::Softplus;
  if (name == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected softplus|tanh)");
}

std::string to_string(Activation a) {
  return a == Activation::Softplus ? "softplus" : "tanh";
}

Precision parse_precision(std::string_view name) {
  if (name == "float32") return Precision::Float32;
  if (name == "float64") return Precision::Float64;
  throw ConfigError("unknown precision '" + std::string(name) + "' (expected float32|float64)");
}

std::string to_string(Precision p) { return p == Precision::Float32 ? "float32" : "float64"; }

std::vector<int> MlpConfig::widths() const {
  std::vector<int> w;
  w.push_back(input_width());
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(dim);
  return w;
}

void MlpConfig::validate() const {
  if (dim < 1) throw ConfigError("mlp: dim must be >= 1");
  for (int h : hidden)
    if (h < 1) throw ConfigError("mlp: hidden widths must be >= 1");
  if (embedding.n_frequencies < 0) throw ConfigError("mlp: n_frequencies must be >= 0");
  if (!(embedding.base_frequency > 0.0)) throw ConfigError("mlp: base_frequency must be > 0");
}

// ---------------------------------------------------------------------------
// MlpParameters

template <typename Scalar>
std::size_t MlpParameters<Scalar>::size() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  return n;
}

template <typename Scalar>
bool MlpParameters<Scalar>::same_shape(const MlpParameters& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size())
    return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() ||
        weights[l].cols() != other.weights[l].cols())
      return false;
  }
  for (std::size_t l = 0; l < biases.size(); ++l)
    if (biases[l].size() != other.biases[l].size()) return false;
  return true;
}

template <typename Scalar>
bool MlpParameters<Scalar>::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

template <typename Scalar>
void MlpParameters<Scalar>::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

template <typename Scalar>
MlpParameters<Scalar> MlpParameters<Scalar>::zeros_like() const {
  MlpParameters out = *this;
  out.set_zero();
  return out;
}

// Layout: for each layer, weights (column-major) then biases.
template <typename Scalar>
std::vector<double> MlpParameters<Scalar>::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index i = 0; i < weights[l].size(); ++i)
      flat.push_back(static_cast<double>(weights[l].data()[i]));
    for (Eigen::Index i = 0; i < biases[l].size(); ++i)
      flat.push_back(static_cast<double>(biases[l].data()[i]));
  }
  return flat;
}

template <typename Scalar>
void MlpParameters<Scalar>::unflatten(std::span<const double> flat) {
  if (flat.size() != size()) throw ShapeError("unflatten: parameter count mismatch");
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index i = 0; i < weights[l].size(); ++i)
      weights[l].data()[i] = static_cast<Scalar>(flat[k++]);
    for (Eigen::Index i = 0; i < biases[l].size(); ++i)
      biases[l].data()[i] = static_cast<Scalar>(flat[k++]);
  }
}

// ---------------------------------------------------------------------------
// Mlp

namespace {

// Writes act(z) into out and, if deriv is non-null, act'(z) into *deriv.
template <typename Matrix>
void apply_activation(Activation a, const Matrix& z, Matrix& out, Matrix* deriv) {
  using S = typename Matrix::Scalar;
  if (a == Activation::Tanh) {
    out = z.array().tanh().matrix();
    if (deriv) *deriv = (S(1) - out.array().square()).matrix();
    return;
  }
  // softplus(z) = max(z, 0) + log1p(exp(-|z|)); derivative sigmoid(z).
  const Matrix e = (-z.array().abs()).exp().matrix();
  out = (z.array().max(S(0)) + e.array().log1p()).matrix();
  if (deriv) {
    *deriv = (z.array() >= S(0))
                 .select(S(1) / (S(1) + e.array()), e.array() / (S(1) + e.array()))
                 .matrix();
  }
}

}  // namespace

template <typename Scalar>
Mlp<Scalar>::Mlp(MlpConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng = make_rng(seed, "mlp/init");
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto widths = config_.widths();
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    Matrix w(fan_out, fan_in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(scale * normal(rng));
    params_.weights.push_back(std::move(w));
    params_.biases.push_back(Vector::Zero(fan_out));
  }
  if (config_.zero_init_output) params_.weights.back().setZero();
}

template <typename Scalar>
Mlp<Scalar>::Mlp(MlpConfig config, Parameters params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const auto widths = config_.widths();
  if (params_.weights.size() + 1 != widths.size() || params_.biases.size() != params_.weights.size())
    throw ShapeError("mlp: layer count does not match config");
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (params_.weights[l].rows() != widths[l + 1] || params_.weights[l].cols() != widths[l] ||
        params_.biases[l].size() != widths[l + 1])
      throw ShapeError("mlp: layer " + std::to_string(l) + " shape does not match config");
  }
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix Mlp<Scalar>::forward(const Eigen::Ref<const Matrix>& x,
                                                  std::span<const double> t,
                                                  Cache* cache) const {
  if (x.rows() != config_.dim) throw ShapeError("mlp forward: state dimension mismatch");
  if (static_cast<std::size_t>(x.cols()) != t.size())
    throw ShapeError("mlp forward: one time value per column required");
  if (!x.allFinite()) throw std::invalid_argument("mlp forward: non-finite input state");
  for (double ti : t)
    if (!(ti >= 0.0 && ti <= 1.0)) throw std::invalid_argument("mlp forward: t outside [0, 1]");

  const Eigen::Index batch = x.cols();
  Matrix input(config_.input_width(), batch);
  input.topRows(config_.dim) = x;
  auto emb = input.bottomRows(config_.embedding.width());
  config_.embedding.embed(t, emb);

  if (cache) {
    cache->layer_inputs.clear();
    cache->activation_derivatives.clear();
  }

  const std::size_t n_layers = params_.weights.size();
  Matrix a = std::move(input);
  Matrix z;
  for (std::size_t l = 0; l < n_layers; ++l) {
    z.noalias() = params_.weights[l] * a;
    z.colwise() += params_.biases[l];
    if (cache) cache->layer_inputs.push_back(std::move(a));
    if (l + 1 == n_layers) break;
    if (cache) {
      cache->activation_derivatives.emplace_back();
      apply_activation(config_.activation, z, a, &cache->activation_derivatives.back());
    } else {
      apply_activation<Matrix>(config_.activation, z, a, nullptr);
    }
  }
  return z;
}

template <typename Scalar>
typename Mlp<Scalar>::Vector Mlp<Scalar>::forward(const Eigen::Ref<const Vector>& x,
                                                  double t) const {
  const double times[1] = {t};
  return forward(Matrix(x), std::span<const double>(times, 1)).col(0);
}

template <typename Scalar>
typename Mlp<Scalar>::Parameters Mlp<Scalar>::backward(
    const Cache& cache, const Eigen::Ref<const Matrix>& grad_output) const {
  const std::size_t n_layers = params_.weights.size();
  if (cache.empty() || cache.layer_inputs.size() != n_layers ||
      cache.activation_derivatives.size() + 1 != n_layers)
    throw UsageError("mlp backward: no cached forward pass");
  if (grad_output.rows() != config_.dim || grad_output.cols() != cache.layer_inputs[0].cols())
    throw ShapeError("mlp backward: gradient shape does not match cached batch");

  Parameters grads;
  grads.weights.resize(n_layers);
  grads.biases.resize(n_layers);
  Matrix g = grad_output;
  Matrix back;
  for (std::size_t l = n_layers; l-- > 0;) {
    grads.weights[l].noalias() = g * cache.layer_inputs[l].transpose();
    grads.biases[l] = g.rowwise().sum();
    if (l == 0) break;
    back.noalias() = params_.weights[l].transpose() * g;
    g = back.cwiseProduct(cache.activation_derivatives[l - 1]);
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Adam

template <typename Scalar>
AdamState<Scalar> AdamState<Scalar>::for_parameters(const MlpParameters<Scalar>& params,
                                                    double learning_rate) {
  AdamState s;
  s.first_moment = params.zeros_like();
  s.second_moment = params.zeros_like();
  s.learning_rate = learning_rate;
  return s;
}

template <typename Scalar>
void optimizer_step(AdamState<Scalar>& state, MlpParameters<Scalar>& params,
                    const MlpParameters<Scalar>& grads) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment))
    throw ShapeError("optimizer_step: parameter, gradient and moment shapes differ");

  ++state.step;
  const auto b1 = static_cast<Scalar>(state.beta1);
  const auto b2 = static_cast<Scalar>(state.beta2);
  const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const auto step_size = static_cast<Scalar>(state.learning_rate / correction1);
  const auto inv_sqrt_c2 = static_cast<Scalar>(1.0 / std::sqrt(correction2));
  const auto eps = static_cast<Scalar>(state.epsilon);

  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = (b2 * v.array() + (Scalar(1) - b2) * g.array().square()).matrix();
    p.array() -= step_size * m.array() / (v.array().sqrt() * inv_sqrt_c2 + eps);
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], state.first_moment.weights[l], state.second_moment.weights[l],
           grads.weights[l]);
    update(params.biases[l], state.first_moment.biases[l], state.second_moment.biases[l],
           grads.biases[l]);
  }
  if (!params.all_finite()) throw NumericError("optimizer_step: non-finite parameters");
}

template struct MlpParameters<float>;
template struct MlpParameters<double>;
template class Mlp<float>;
template class Mlp<double>;
template struct AdamState<float>;
template struct AdamState<double>;
template void optimizer_step(AdamState<float>&, MlpParameters<float>&, const MlpParameters<float>&);
template void optimizer_step(AdamState<double>&, MlpParameters<double>&,
                             const MlpParameters<double>&);

}  // namespace flowlag
