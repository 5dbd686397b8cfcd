#include "flowlag/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "flowlag/binary_io.hpp"
#include "flowlag/errors.hpp"

namespace flowlag {

namespace detail {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace detail

namespace {

constexpr std::string_view kMagic = "FLOWLAGC";

MlpParameters<double> shaped_like(const MlpConfig& config) {
  MlpParameters<double> p;
  const auto widths = config.widths();
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    p.weights.emplace_back(Eigen::MatrixXd::Zero(widths[l + 1], widths[l]));
    p.biases.emplace_back(Eigen::VectorXd::Zero(widths[l + 1]));
  }
  return p;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  detail::ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(Checkpoint::kVersion);
  w.put<std::uint32_t>(ckpt.precision == Precision::Float32 ? 32 : 64);

  const auto& c = ckpt.config;
  w.put<std::int32_t>(c.dim);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.hidden.size()));
  for (int h : c.hidden) w.put<std::int32_t>(h);
  w.put<std::int32_t>(c.embedding.n_frequencies);
  w.put<double>(c.embedding.base_frequency);
  w.put<std::uint32_t>(c.activation == Activation::Softplus ? 0 : 1);
  w.put<std::uint8_t>(c.zero_init_output ? 1 : 0);

  const auto params = ckpt.params.flatten();
  w.put<std::uint64_t>(params.size());
  w.put_array(params);

  const auto& opt = ckpt.optimizer;
  w.put<std::int64_t>(opt.step);
  w.put<double>(opt.learning_rate);
  w.put<double>(opt.beta1);
  w.put<double>(opt.beta2);
  w.put<double>(opt.epsilon);
  const bool has_moments = opt.first_moment.size() == params.size();
  w.put<std::uint8_t>(has_moments ? 1 : 0);
  if (has_moments) {
    w.put_array(opt.first_moment.flatten());
    w.put_array(opt.second_moment.flatten());
  }

  w.put_string(ckpt.rng_state);
  w.put<std::int64_t>(ckpt.step);
  w.put_string(ckpt.metadata);
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.get_bytes(kMagic.size()) != kMagic) throw FormatError("not a flowlag checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != Checkpoint::kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  const auto bits = r.get<std::uint32_t>();
  if (bits != 32 && bits != 64) throw FormatError("bad precision tag");
  ckpt.precision = bits == 32 ? Precision::Float32 : Precision::Float64;

  auto& c = ckpt.config;
  c.dim = r.get<std::int32_t>();
  const auto n_hidden = r.get<std::uint32_t>();
  if (n_hidden > 1024) throw FormatError("implausible layer count");
  c.hidden.resize(n_hidden);
  for (auto& h : c.hidden) h = r.get<std::int32_t>();
  c.embedding.n_frequencies = r.get<std::int32_t>();
  c.embedding.base_frequency = r.get<double>();
  const auto act = r.get<std::uint32_t>();
  if (act > 1) throw FormatError("bad activation tag");
  c.activation = act == 0 ? Activation::Softplus : Activation::Tanh;
  c.zero_init_output = r.get<std::uint8_t>() != 0;
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }

  ckpt.params = shaped_like(c);
  const auto n = r.get<std::uint64_t>();
  if (n != ckpt.params.size()) throw FormatError("parameter count does not match widths");
  ckpt.params.unflatten(r.get_array<double>(n));

  auto& opt = ckpt.optimizer;
  opt.step = r.get<std::int64_t>();
  opt.learning_rate = r.get<double>();
  opt.beta1 = r.get<double>();
  opt.beta2 = r.get<double>();
  opt.epsilon = r.get<double>();
  if (r.get<std::uint8_t>() != 0) {
    opt.first_moment = shaped_like(c);
    opt.second_moment = shaped_like(c);
    opt.first_moment.unflatten(r.get_array<double>(n));
    opt.second_moment.unflatten(r.get_array<double>(n));
  }

  ckpt.rng_state = r.get_string();
  ckpt.step = r.get<std::int64_t>();
  ckpt.metadata = r.get_string();
  if (!r.done()) throw FormatError("trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  detail::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
  return decode_checkpoint(detail::read_file(path));
}

template <typename Scalar>
Checkpoint make_checkpoint(const Mlp<Scalar>& net, const AdamState<Scalar>& opt,
                           const std::string& rng_state, std::int64_t step,
                           std::string metadata) {
  Checkpoint ckpt;
  ckpt.config = net.config();
  ckpt.precision = std::is_same_v<Scalar, float> ? Precision::Float32 : Precision::Float64;
  ckpt.params = net.parameters().template cast<double>();
  ckpt.optimizer.step = opt.step;
  ckpt.optimizer.learning_rate = opt.learning_rate;
  ckpt.optimizer.beta1 = opt.beta1;
  ckpt.optimizer.beta2 = opt.beta2;
  ckpt.optimizer.epsilon = opt.epsilon;
  ckpt.optimizer.first_moment = opt.first_moment.template cast<double>();
  ckpt.optimizer.second_moment = opt.second_moment.template cast<double>();
  ckpt.rng_state = rng_state;
  ckpt.step = step;
  ckpt.metadata = std::move(metadata);
  return ckpt;
}

template <typename Scalar>
Mlp<Scalar> restore_network(const Checkpoint& ckpt) {
  return Mlp<Scalar>(ckpt.config, ckpt.params.template cast<Scalar>());
}

template <typename Scalar>
AdamState<Scalar> restore_optimizer(const Checkpoint& ckpt) {
  AdamState<Scalar> opt;
  const auto& src = ckpt.optimizer;
  opt.step = src.step;
  opt.learning_rate = src.learning_rate;
  opt.beta1 = src.beta1;
  opt.beta2 = src.beta2;
  opt.epsilon = src.epsilon;
  if (src.first_moment.size() == ckpt.params.size()) {
    opt.first_moment = src.first_moment.template cast<Scalar>();
    opt.second_moment = src.second_moment.template cast<Scalar>();
  } else {
    const auto p = ckpt.params.template cast<Scalar>();
    opt.first_moment = p.zeros_like();
    opt.second_moment = p.zeros_like();
  }
  return opt;
}

template Checkpoint make_checkpoint(const Mlp<float>&, const AdamState<float>&,
                                    const std::string&, std::int64_t, std::string);
template Checkpoint make_checkpoint(const Mlp<double>&, const AdamState<double>&,
                                    const std::string&, std::int64_t, std::string);
template Mlp<float> restore_network(const Checkpoint&);
template Mlp<double> restore_network(const Checkpoint&);
template AdamState<float> restore_optimizer(const Checkpoint&);
template AdamState<double> restore_optimizer(const Checkpoint&);

}  // namespace flowlag
