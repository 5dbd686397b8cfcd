#include "flowlag/binary_io.hpp"
#include "flowlag/errors.hpp"
#include "flowlag/solver.hpp"

namespace flowlag {

namespace {
constexpr std::string_view kMagic = "FLOWLAGT";
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::string encode_trajectory(const Trajectory& traj) {
  if (traj.states.size() != traj.times.size())
    throw ShapeError("trajectory: one state batch per checkpoint time required");
  detail::ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(traj.dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(traj.n_particles));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(traj.times.size()));
  w.put<std::uint64_t>(traj.seed);
  for (double t : traj.times) w.put<double>(t);
  for (const auto& batch : traj.states) {
    if (batch.rows() != traj.dim || batch.cols() != traj.n_particles)
      throw ShapeError("trajectory: batch shape differs from header");
    // Column-major dim x n is particle-major in memory.
    for (Eigen::Index i = 0; i < batch.size(); ++i)
      w.put<float>(static_cast<float>(batch.data()[i]));
  }
  return w.take();
}

Trajectory decode_trajectory(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.get_bytes(kMagic.size()) != kMagic) throw FormatError("not a flowlag trajectory");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw FormatError("unsupported trajectory version " + std::to_string(version));
  Trajectory traj;
  traj.dim = static_cast<int>(r.get<std::uint32_t>());
  traj.n_particles = static_cast<int>(r.get<std::uint32_t>());
  const auto k = r.get<std::uint32_t>();
  traj.seed = r.get<std::uint64_t>();
  traj.times = r.get_array<double>(k);
  traj.requested_times = traj.times;
  const std::size_t per_batch = static_cast<std::size_t>(traj.dim) * traj.n_particles;
  for (std::uint32_t c = 0; c < k; ++c) {
    const auto raw = r.get_array<float>(per_batch);
    Eigen::MatrixXd batch(traj.dim, traj.n_particles);
    for (std::size_t i = 0; i < per_batch; ++i) batch.data()[i] = raw[i];
    traj.states.push_back(std::move(batch));
  }
  if (!r.done()) throw FormatError("trailing bytes in trajectory");
  return traj;
}

void save_trajectory(const Trajectory& traj, const std::string& path) {
  detail::write_file(path, encode_trajectory(traj));
}

Trajectory load_trajectory(const std::string& path) {
  return decode_trajectory(detail::read_file(path));
}

}  // namespace flowlag
