#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace flowlag {

using Rng = std::mt19937_64;

// 64-bit FNV-1a; used for labels and config hashes.
std::uint64_t fnv1a64(std::string_view bytes);

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed from a master seed and a label, so that
// each consumer ("noise", "data", "time", ...) gets its own reproducible RNG.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

inline Rng make_rng(std::uint64_t master, std::string_view label) {
  return Rng(derive_seed(master, label));
}

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& state);

// Fills a matrix with iid N(0, 1) draws, column-major order.
void fill_standard_normal(Rng& rng, Eigen::Ref<Eigen::MatrixXd> out);

Eigen::MatrixXd standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols);

}  // namespace flowlag
