// Runs every acceptance criterion and prints one PASS/FAIL line each.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "cli/playbook.hpp"

int main(int argc, char** argv) {
  CLI::App app{"flowlag acceptance suite"};
  flowlag::cli::PlaybookOptions opts;
  bool fresh = false;
  bool verbose = true;
  std::vector<int> only;
  app.add_option("--work-dir", opts.work_dir)->capture_default_str();
  app.add_flag("--fresh", fresh, "Delete the work dir first so every network is retrained");
  app.add_option("--steps", opts.train_steps)->capture_default_str();
  app.add_option("--seed", opts.seed)->capture_default_str();
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_flag("!--quiet", verbose, "Hide per-check details");
  CLI11_PARSE(app, argc, argv);

  if (fresh) std::filesystem::remove_all(opts.work_dir);
  opts.log = &std::cerr;
  flowlag::cli::Playbook playbook(opts);

  int failed = 0;
  for (int id = 1; id <= flowlag::cli::kCriterionCount; ++id) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto r = playbook.run(id);
    if (verbose)
      for (const auto& d : r.details) std::cout << "    " << d << '\n';
    std::cout << (r.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << r.name << " ("
              << static_cast<int>(r.seconds * 10) / 10.0 << " s)" << std::endl;
    if (!r.pass) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
