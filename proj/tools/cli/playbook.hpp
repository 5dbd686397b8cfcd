#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cli/commands.hpp"

namespace flowlag::cli {

inline constexpr int kCriterionCount = 12;

struct CriterionResult {
  int id = 0;
  bool pass = false;
  std::string name;
  std::vector<std::string> details;
  double seconds = 0.0;
};

struct PlaybookOptions {
  std::filesystem::path work_dir = "flowlag-acceptance";
  // Reuse checkpoints in work_dir whose stored config matches.
  bool reuse = true;
  int train_steps = 20000;
  std::uint64_t seed = 0;
  std::ostream* log = nullptr;
};

// Executes the acceptance criteria. Trained networks are shared between
// criteria within one Playbook.
class Playbook {
 public:
  explicit Playbook(PlaybookOptions options);

  CriterionResult run(int id);

  // The documented single CLI invocation for a criterion.
  static std::string invocation(int id);
  static std::string name(int id);

  // Training config of the shared D = 64 Gaussian networks.
  TrainConfig net_config(PathKind path, LossKind loss) const;
  const Checkpoint& network(PathKind path, LossKind loss);

 private:
  void jensen(CriterionResult& r);
  void boundary(CriterionResult& r);
  void cross_term(CriterionResult& r);
  void rho(CriterionResult& r);
  void calibration(CriterionResult& r);
  void ssc_identity(CriterionResult& r, PathKind path);
  void gradients(CriterionResult& r);
  void norm_signature(CriterionResult& r);
  void mafm_effect(CriterionResult& r);
  void frechet(CriterionResult& r);
  void lag_harness(CriterionResult& r, PathKind path, bool sweep_part);
  void path_robustness(CriterionResult& r);

  PlaybookOptions opts_;
  std::map<std::pair<PathKind, LossKind>, Checkpoint> nets_;
};

}  // namespace flowlag::cli
