#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "flowlag/gaussian_oracle.hpp"
#include "flowlag/rng.hpp"

namespace flowlag {

enum class DatasetKind { Gaussian, GaussianMixture, Checkerboard, TwoMoons };

DatasetKind parse_dataset_kind(std::string_view name);
std::string to_string(DatasetKind kind);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::Gaussian;
  int dim = 2;            // forced to 2 for checkerboard / two-moons
  double data_std = 1.0;  // gaussian only
  int components = 8;     // gaussian-mixture only

  void validate() const;
};

// Affine map applied to raw samples: x = (raw - mean) / scale.
struct Normalization {
  Eigen::VectorXd mean;
  double scale = 1.0;
};

// Target distribution p1 after normalization. Gaussian data is already zero
// mean and is left untouched so data_std keeps its meaning; the other kinds
// are mean-centred and scaled into the unit box from a fixed calibration draw.
class Dataset {
 public:
  explicit Dataset(DatasetSpec spec);

  const DatasetSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  const Normalization& normalization() const { return norm_; }

  // n normalized samples as columns.
  Eigen::MatrixXd sample(int n, Rng& rng) const;

  // Present for the isotropic Gaussian kind.
  std::optional<GaussianFlowSpec> gaussian() const;

 private:
  Eigen::MatrixXd sample_raw(int n, Rng& rng) const;

  DatasetSpec spec_;
  Eigen::MatrixXd mixture_means_;  // dim x components
  double mixture_std_ = 0.0;
  Normalization norm_;
};

}  // namespace flowlag
