#pragma once

#include <cstdint>
#include <string>

#include "flowlag/nn.hpp"

namespace flowlag {

// Everything needed to resume or evaluate a trained network. Parameters and
// moments are stored as float64 regardless of training precision; float32
// values survive the round trip exactly.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  MlpConfig config;
  Precision precision = Precision::Float32;
  MlpParameters<double> params;
  AdamState<double> optimizer;
  std::string rng_state;
  std::int64_t step = 0;
  std::string metadata;  // free-form JSON text (training config, path, dataset)
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

template <typename Scalar>
Checkpoint make_checkpoint(const Mlp<Scalar>& net, const AdamState<Scalar>& opt,
                           const std::string& rng_state, std::int64_t step,
                           std::string metadata);

template <typename Scalar>
Mlp<Scalar> restore_network(const Checkpoint& ckpt);

template <typename Scalar>
AdamState<Scalar> restore_optimizer(const Checkpoint& ckpt);

}  // namespace flowlag
