#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace flowlag {

// Both activations have strictly positive derivatives everywhere.
enum class Activation { Softplus, Tanh };

Activation parse_activation(std::string_view name);
std::string to_string(Activation a);

enum class Precision { Float32, Float64 };

Precision parse_precision(std::string_view name);
std::string to_string(Precision p);

// Sinusoidal features [sin(w_k t), cos(w_k t)], w_k = base * 2^k.
struct TimeEmbedding {
  int n_frequencies = 6;
  double base_frequency = 1.0;

  int width() const { return 2 * n_frequencies; }
  // Writes the embedding of each entry of t into the columns of out.
  template <typename Derived>
  void embed(std::span<const double> t, Eigen::MatrixBase<Derived>& out) const;
};

struct MlpConfig {
  int dim = 2;
  std::vector<int> hidden{256, 256, 256};
  TimeEmbedding embedding;
  Activation activation = Activation::Softplus;
  bool zero_init_output = false;

  int input_width() const { return dim + embedding.width(); }
  // Layer widths including input and output.
  std::vector<int> widths() const;
  void validate() const;
};

template <typename Scalar>
struct MlpParameters {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Matrix> weights;  // weights[l] is out_l x in_l
  std::vector<Vector> biases;

  std::size_t size() const;
  bool same_shape(const MlpParameters& other) const;
  bool all_finite() const;
  void set_zero();
  MlpParameters zeros_like() const;

  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);

  template <typename Other>
  MlpParameters<Other> cast() const;
};

// Feed-forward velocity network v(x, t) = MLP([x; embed(t)]).
// Columns of every batch matrix are samples.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = typename MlpParameters<Scalar>::Matrix;
  using Vector = typename MlpParameters<Scalar>::Vector;
  using Parameters = MlpParameters<Scalar>;

  // Activations saved by forward() for a subsequent backward().
  struct Cache {
    std::vector<Matrix> layer_inputs;
    std::vector<Matrix> activation_derivatives;  // act'(z) per hidden layer
    bool empty() const { return layer_inputs.empty(); }
  };

  Mlp() = default;
  Mlp(MlpConfig config, std::uint64_t seed);
  Mlp(MlpConfig config, Parameters params);

  const MlpConfig& config() const { return config_; }
  int dim() const { return config_.dim; }
  const Parameters& parameters() const { return params_; }
  Parameters& parameters() { return params_; }

  // Throws std::invalid_argument on non-finite x or t outside [0, 1].
  Matrix forward(const Eigen::Ref<const Matrix>& x, std::span<const double> t,
                 Cache* cache = nullptr) const;
  Vector forward(const Eigen::Ref<const Vector>& x, double t) const;

  // Gradient of a scalar loss with respect to parameters, given dLoss/dOutput.
  // Throws UsageError if the cache holds no forward pass of matching batch size.
  Parameters backward(const Cache& cache, const Eigen::Ref<const Matrix>& grad_output) const;

 private:
  MlpConfig config_;
  Parameters params_;
};

// Adam with bias correction.
template <typename Scalar>
struct AdamState {
  MlpParameters<Scalar> first_moment;
  MlpParameters<Scalar> second_moment;
  std::int64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_parameters(const MlpParameters<Scalar>& params, double learning_rate);
};

// Updates params in place. Throws ShapeError on mismatched shapes and
// NumericError if any parameter becomes non-finite.
template <typename Scalar>
void optimizer_step(AdamState<Scalar>& state, MlpParameters<Scalar>& params,
                    const MlpParameters<Scalar>& grads);

template <typename Scalar>
template <typename Other>
MlpParameters<Other> MlpParameters<Scalar>::cast() const {
  MlpParameters<Other> out;
  for (const auto& w : weights) out.weights.push_back(w.template cast<Other>());
  for (const auto& b : biases) out.biases.push_back(b.template cast<Other>());
  return out;
}

template <typename Derived>
void TimeEmbedding::embed(std::span<const double> t, Eigen::MatrixBase<Derived>& out) const {
  using S = typename Derived::Scalar;
  for (std::size_t j = 0; j < t.size(); ++j) {
    double w = base_frequency;
    for (int k = 0; k < n_frequencies; ++k, w *= 2.0) {
      out(2 * k, static_cast<Eigen::Index>(j)) = static_cast<S>(std::sin(w * t[j]));
      out(2 * k + 1, static_cast<Eigen::Index>(j)) = static_cast<S>(std::cos(w * t[j]));
    }
  }
}

}  // namespace flowlag
