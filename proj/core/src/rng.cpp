#include "flowlag/rng.hpp"

#include <sstream>

#include "flowlag/errors.hpp"

namespace flowlag {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  return splitmix64(splitmix64(master) ^ fnv1a64(label));
}

std::string serialize_rng(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng deserialize_rng(const std::string& state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng;
  if (is.fail()) throw FormatError("invalid RNG state");
  return rng;
}

void fill_standard_normal(Rng& rng, Eigen::Ref<Eigen::MatrixXd> out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double* p = out.data();
  if (out.innerStride() == 1 && out.outerStride() == out.rows()) {
    for (Eigen::Index i = 0; i < out.size(); ++i) p[i] = normal(rng);
    return;
  }
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) = normal(rng);
}

Eigen::MatrixXd standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  fill_standard_normal(rng, m);
  return m;
}

}  // namespace flowlag
