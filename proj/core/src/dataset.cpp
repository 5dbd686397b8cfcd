#include "flowlag/dataset.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "flowlag/errors.hpp"

namespace flowlag {

namespace {
constexpr int kCalibrationSamples = 200000;
constexpr std::uint64_t kCalibrationSeed = 0x5eed;
}  // namespace

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "gaussian") return DatasetKind::Gaussian;
  if (name == "gaussian-mixture") return DatasetKind::GaussianMixture;
  if (name == "checkerboard") return DatasetKind::Checkerboard;
  if (name == "two-moons") return DatasetKind::TwoMoons;
  throw ConfigError("unknown dataset '" + std::string(name) +
                    "' (expected gaussian|gaussian-mixture|checkerboard|two-moons)");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Gaussian: return "gaussian";
    case DatasetKind::GaussianMixture: return "gaussian-mixture";
    case DatasetKind::Checkerboard: return "checkerboard";
    case DatasetKind::TwoMoons: return "two-moons";
  }
  return "?";
}

void DatasetSpec::validate() const {
  if (dim < 1) throw ConfigError("dataset: dim must be >= 1");
  if ((kind == DatasetKind::Checkerboard || kind == DatasetKind::TwoMoons) && dim != 2)
    throw ConfigError("dataset: " + to_string(kind) + " is two-dimensional");
  if (kind == DatasetKind::Gaussian && !(data_std > 0.0))
    throw ConfigError("dataset: data_std must be positive");
  if (kind == DatasetKind::GaussianMixture && components < 1)
    throw ConfigError("dataset: components must be >= 1");
}

Dataset::Dataset(DatasetSpec spec) : spec_(spec) {
  if (spec_.kind == DatasetKind::Checkerboard || spec_.kind == DatasetKind::TwoMoons)
    spec_.dim = 2;
  spec_.validate();

  if (spec_.kind == DatasetKind::GaussianMixture) {
    // Component means on a sphere of radius 3, unit-ish separation per component.
    Rng layout = make_rng(static_cast<std::uint64_t>(spec_.components) * 7919 + spec_.dim,
                          "dataset/mixture-layout");
    mixture_means_ = standard_normal(layout, spec_.dim, spec_.components);
    for (Eigen::Index k = 0; k < mixture_means_.cols(); ++k)
      mixture_means_.col(k) *= 3.0 / mixture_means_.col(k).norm();
    mixture_std_ = 0.5;
  }

  norm_.mean = Eigen::VectorXd::Zero(spec_.dim);
  norm_.scale = 1.0;
  if (spec_.kind == DatasetKind::Gaussian) return;

  Rng rng = make_rng(kCalibrationSeed, "dataset/calibration");
  const Eigen::MatrixXd raw = sample_raw(kCalibrationSamples, rng);
  norm_.mean = raw.rowwise().mean();
  const Eigen::MatrixXd centred = raw.colwise() - norm_.mean;
  norm_.scale = centred.cwiseAbs().maxCoeff();
}

Eigen::MatrixXd Dataset::sample_raw(int n, Rng& rng) const {
  Eigen::MatrixXd out(spec_.dim, n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (spec_.kind) {
    case DatasetKind::Gaussian:
      fill_standard_normal(rng, out);
      out *= spec_.data_std;
      break;
    case DatasetKind::GaussianMixture: {
      std::uniform_int_distribution<int> pick(0, spec_.components - 1);
      for (int j = 0; j < n; ++j) {
        const int k = pick(rng);
        for (int i = 0; i < spec_.dim; ++i)
          out(i, j) = mixture_means_(i, k) + mixture_std_ * normal(rng);
      }
      break;
    }
    case DatasetKind::Checkerboard:
      // 4x4 board on [-2, 2]^2 with alternating occupied cells.
      for (int j = 0; j < n; ++j) {
        const double x = 4.0 * unit(rng) - 2.0;
        const double offset = unit(rng) < 0.5 ? -2.0 : 0.0;
        const double y = unit(rng) + offset + std::fmod(std::floor(x) + 4.0, 2.0);
        out(0, j) = x;
        out(1, j) = y;
      }
      break;
    case DatasetKind::TwoMoons:
      for (int j = 0; j < n; ++j) {
        const double theta = std::numbers::pi * unit(rng);
        if (unit(rng) < 0.5) {
          out(0, j) = std::cos(theta);
          out(1, j) = std::sin(theta);
        } else {
          out(0, j) = 1.0 - std::cos(theta);
          out(1, j) = 0.5 - std::sin(theta);
        }
        out(0, j) += 0.05 * normal(rng);
        out(1, j) += 0.05 * normal(rng);
      }
      break;
  }
  return out;
}

Eigen::MatrixXd Dataset::sample(int n, Rng& rng) const {
  if (n < 0) throw ConfigError("dataset: negative sample count");
  Eigen::MatrixXd raw = sample_raw(n, rng);
  if (spec_.kind == DatasetKind::Gaussian) return raw;
  return (raw.colwise() - norm_.mean) / norm_.scale;
}

std::optional<GaussianFlowSpec> Dataset::gaussian() const {
  if (spec_.kind != DatasetKind::Gaussian) return std::nullopt;
  return GaussianFlowSpec{spec_.dim, spec_.data_std};
}

}  // namespace flowlag
