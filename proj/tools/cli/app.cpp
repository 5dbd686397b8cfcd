#include "cli/app.hpp"

#include <cstdlib>
#include <iostream>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "json_fields.hpp"

#include "cli/experiment.hpp"
#include "cli/playbook.hpp"
#include "flowlag/errors.hpp"

namespace flowlag::cli {

using nlohmann::json;

void apply_thread_limit() {
  const char* env = std::getenv("FLOWLAG_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("FLOWLAG_THREADS must be a positive integer");
  Eigen::setNbThreads(static_cast<int>(n));
}

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  bool verify = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  app->add_option("--out", c.out, "Output directory for artifacts and manifest");
  app->add_flag("--verify", c.verify, "Enable runtime assertions (exit 3 on failure)");
}

json base_config(const std::string& experiment, const Common& c) {
  json j;
  j["experiment"] = experiment;
  j["seed"] = c.seed;
  if (c.verify) j["verify"] = true;
  if (!c.out.empty()) j["output_dir"] = c.out;
  return j;
}

int execute_json(const json& j, std::ostream& out, std::ostream& err) {
  const ExperimentConfig config = parse_experiment_config(j.dump(), {});
  return execute_experiment(config, out, err).exit_code;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kinetic-energy lag diagnostics for flow-matching samplers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  // run
  std::string run_config;
  auto* run = app.add_subcommand("run", "Run an experiment config file");
  run->add_option("config", run_config, "Experiment JSON")->required()->check(CLI::ExistingFile);

  // train
  Common train_c;
  std::string train_config;
  auto* train = app.add_subcommand("train", "Train a velocity network");
  train->add_option("--config", train_config, "Training config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(train, train_c);

  // sample
  Common sample_c;
  std::string sample_ckpt, sample_schedule = "constant-one", sample_method = "euler", sample_path;
  int sample_nfe = 50, sample_particles = 8192;
  double sample_diffusion = 1.0;
  std::vector<double> sample_checkpoints{0.2, 0.4, 0.6, 0.8, 1.0};
  auto* sample = app.add_subcommand("sample", "Integrate the sampler from a checkpoint");
  sample->add_option("--checkpoint", sample_ckpt)->required();
  sample->add_option("--nfe", sample_nfe)->capture_default_str();
  sample->add_option("--schedule", sample_schedule, "e.g. linear:1.1:1.0")->capture_default_str();
  sample->add_option("--method", sample_method, "euler|heun|euler-maruyama")->capture_default_str();
  sample->add_option("--particles", sample_particles)->capture_default_str();
  sample->add_option("--checkpoints", sample_checkpoints)->delimiter(',');
  sample->add_option("--diffusion-scale", sample_diffusion)->capture_default_str();
  sample->add_option("--path", sample_path, "Override the checkpoint's path");
  add_common(sample, sample_c);

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Gaussian oracle computations");
  oracle->require_subcommand(1);
  Common jensen_c, cross_c, rho_c;
  int jensen_dim = 64, cross_dim = 16, jensen_nmc = 100000, cross_nmc = 100000, rho_pairs = 50000;
  double jensen_std = 1.0, cross_std = 1.0, rho_std = 1.0;
  std::string jensen_path = "linear";
  std::vector<double> jensen_t{0.5}, cross_t{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<int> rho_dims{4096};
  auto* jensen = oracle->add_subcommand("jensen", "Learned vs target kinetic energy");
  jensen->add_option("--dim", jensen_dim)->capture_default_str();
  jensen->add_option("--t", jensen_t)->delimiter(',');
  jensen->add_option("--data-std", jensen_std)->capture_default_str();
  jensen->add_option("--path", jensen_path)->capture_default_str();
  jensen->add_option("--n-mc", jensen_nmc)->capture_default_str();
  add_common(jensen, jensen_c);
  auto* cross = oracle->add_subcommand("cross-term", "E[<x0, x1> | x_t]: closed form vs MC");
  cross->add_option("--dim", cross_dim)->capture_default_str();
  cross->add_option("--t", cross_t)->delimiter(',');
  cross->add_option("--data-std", cross_std)->capture_default_str();
  cross->add_option("--n-mc", cross_nmc)->capture_default_str();
  add_common(cross, cross_c);
  auto* rho = oracle->add_subcommand("rho", "Concentration of the normalized cross term");
  rho->add_option("--dim", rho_dims)->delimiter(',');
  rho->add_option("--pairs", rho_pairs)->capture_default_str();
  rho->add_option("--data-std", rho_std)->capture_default_str();
  add_common(rho, rho_c);

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Norm profiles and Frechet lag");
  diagnose->require_subcommand(1);
  Common norm_c, fld_c, lag_c;
  std::string norm_ckpt, fld_traj, fld_ckpt, lag_base, lag_corr, lag_ckpt;
  std::string fld_dataset, lag_dataset;
  int norm_samples = 2000, norm_grid = 20, fld_dim = 0, lag_dim = 0;
  double fld_std = 1.0, lag_std = 1.0;
  auto* norm = diagnose->add_subcommand("norm", "Velocity-norm profile of a checkpoint");
  norm->add_option("--checkpoint", norm_ckpt)->required();
  norm->add_option("--samples", norm_samples)->capture_default_str();
  norm->add_option("--grid", norm_grid, "Number of uniform intervals on [0, 1]")->capture_default_str();
  add_common(norm, norm_c);
  auto* fld = diagnose->add_subcommand("fld", "FLD of a trajectory at each checkpoint");
  fld->add_option("--trajectory", fld_traj)->required();
  fld->add_option("--checkpoint", fld_ckpt, "Take the reference dataset from this checkpoint");
  fld->add_option("--dataset", fld_dataset, "Reference dataset kind");
  fld->add_option("--dim", fld_dim);
  fld->add_option("--data-std", fld_std);
  add_common(fld, fld_c);
  auto* lag = diagnose->add_subcommand("lag", "Per-checkpoint FLD improvement of one run over another");
  lag->add_option("--baseline", lag_base)->required();
  lag->add_option("--corrected", lag_corr)->required();
  lag->add_option("--checkpoint", lag_ckpt);
  lag->add_option("--dataset", lag_dataset);
  lag->add_option("--dim", lag_dim);
  lag->add_option("--data-std", lag_std);
  add_common(lag, lag_c);

  // lag-sweep
  Common sweep_c;
  std::string sweep_ckpt, sweep_method = "euler", sweep_path;
  LagSweepParams sweep_p;
  bool sweep_no_ref_rows = false;
  auto* sweep = app.add_subcommand("lag-sweep", "NFE x s_start sweep of the FLD lag");
  sweep->add_option("--checkpoint", sweep_ckpt)->required();
  sweep->add_option("--nfe", sweep_p.nfe)->delimiter(',');
  sweep->add_option("--s-start", sweep_p.s_start)->delimiter(',');
  sweep->add_option("--s-end", sweep_p.s_end)->capture_default_str();
  sweep->add_flag("--no-reference-rows", sweep_no_ref_rows, "Skip the 1.0->1.1 and 1.05->1.05 rows");
  sweep->add_option("--method", sweep_method)->capture_default_str();
  sweep->add_option("--particles", sweep_p.particles)->capture_default_str();
  sweep->add_option("--floor-nfe", sweep_p.floor_nfe)->capture_default_str();
  sweep->add_option("--checkpoints", sweep_p.checkpoints)->delimiter(',');
  sweep->add_option("--path", sweep_path);
  add_common(sweep, sweep_c);

  // schedule-calibrate
  Common cal_c;
  std::string cal_shape;
  double cal_area = 0.0, cal_end = 1.0;
  auto* cal = app.add_subcommand("schedule-calibrate", "Solve for s_start given a target area");
  cal->add_option("--shape", cal_shape, "linear|cosine|quad-in|quad-out")->required();
  cal->add_option("--area", cal_area)->required();
  cal->add_option("--s-end", cal_end)->capture_default_str();
  add_common(cal, cal_c);

  // verify
  int criterion = 0;
  PlaybookOptions pb;
  bool fresh = false;
  auto* verify = app.add_subcommand("verify", "Run one acceptance criterion");
  verify->add_option("--criterion", criterion)->required()->check(CLI::Range(1, kCriterionCount));
  verify->add_option("--work-dir", pb.work_dir, "Where trained networks are cached")
      ->capture_default_str();
  verify->add_flag("--fresh", fresh, "Retrain instead of reusing cached networks");
  verify->add_option("--steps", pb.train_steps, "Training steps for the shared networks")
      ->capture_default_str();
  verify->add_option("--seed", pb.seed)->capture_default_str();

  return run_guarded(err, [&]() -> int {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out, err);
    }
    apply_thread_limit();

    if (*run) return run_experiment_file(run_config, out, err);

    if (*train) {
      const json tc = flowlag::detail::parse_json_text(read_text_file(train_config));
      Common c = train_c;
      json j = base_config("train", c);
      if (tc.is_object() && tc.contains("seed") && tc["seed"].is_number_unsigned())
        j["seed"] = tc["seed"];
      j["train"] = tc;
      return execute_json(j, out, err);
    }
    if (*sample) {
      json j = base_config("sample", sample_c);
      j["sample"] = {{"checkpoint", sample_ckpt}, {"particles", sample_particles}};
      if (!sample_path.empty()) j["sample"]["path"] = sample_path;
      j["solver"] = {{"method", sample_method},
                     {"nfe", sample_nfe},
                     {"checkpoints", sample_checkpoints},
                     {"diffusion_scale", sample_diffusion}};
      j["schedule"] = sample_schedule;
      return execute_json(j, out, err);
    }
    if (*jensen) {
      json j = base_config("oracle", jensen_c);
      j["oracle"] = {{"kind", "jensen"}, {"dim", jensen_dim}, {"data_std", jensen_std},
                     {"path", jensen_path}, {"t", jensen_t},  {"n_mc", jensen_nmc}};
      return execute_json(j, out, err);
    }
    if (*cross) {
      json j = base_config("oracle", cross_c);
      j["oracle"] = {{"kind", "cross-term"}, {"dim", cross_dim}, {"data_std", cross_std},
                     {"t", cross_t},         {"n_mc", cross_nmc}};
      return execute_json(j, out, err);
    }
    if (*rho) {
      json j = base_config("rho-stats", rho_c);
      j["rho"] = {{"dims", rho_dims}, {"pairs", rho_pairs}, {"data_std", rho_std}};
      return execute_json(j, out, err);
    }
    auto reference = [](json& d, const std::string& ckpt, const std::string& kind, int dim,
                        double std_dev) {
      if (!ckpt.empty()) d["checkpoint"] = ckpt;
      if (!kind.empty()) {
        d["dataset"] = {{"kind", kind}, {"data_std", std_dev}};
        if (dim > 0) d["dataset"]["dim"] = dim;
      }
    };
    if (*norm) {
      json j = base_config("diagnose", norm_c);
      j["diagnose"] = {{"kind", "norm"},
                       {"checkpoint", norm_ckpt},
                       {"samples", norm_samples},
                       {"grid_intervals", norm_grid}};
      return execute_json(j, out, err);
    }
    if (*fld) {
      json j = base_config("diagnose", fld_c);
      j["diagnose"] = {{"kind", "fld"}, {"trajectory", fld_traj}};
      reference(j["diagnose"], fld_ckpt, fld_dataset, fld_dim, fld_std);
      return execute_json(j, out, err);
    }
    if (*lag) {
      json j = base_config("diagnose", lag_c);
      j["diagnose"] = {{"kind", "lag"}, {"baseline", lag_base}, {"corrected", lag_corr}};
      reference(j["diagnose"], lag_ckpt, lag_dataset, lag_dim, lag_std);
      return execute_json(j, out, err);
    }
    if (*sweep) {
      json j = base_config("lag-sweep", sweep_c);
      j["lag_sweep"] = {{"checkpoint", sweep_ckpt},
                        {"nfe", sweep_p.nfe},
                        {"s_start", sweep_p.s_start},
                        {"s_end", sweep_p.s_end},
                        {"include_reference_rows", !sweep_no_ref_rows},
                        {"method", sweep_method},
                        {"particles", sweep_p.particles},
                        {"floor_nfe", sweep_p.floor_nfe},
                        {"checkpoints", sweep_p.checkpoints}};
      if (!sweep_path.empty()) j["lag_sweep"]["path"] = sweep_path;
      return execute_json(j, out, err);
    }
    if (*cal) {
      json j = base_config("schedule-calibrate", cal_c);
      j["calibrate"] = {{"shape", cal_shape}, {"area", cal_area}, {"s_end", cal_end}};
      return execute_json(j, out, err);
    }
    if (*verify) {
      pb.reuse = !fresh;
      pb.log = &err;
      Playbook playbook(pb);
      const CriterionResult r = playbook.run(criterion);
      for (const auto& d : r.details) out << "  " << d << '\n';
      out << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << ": " << r.name << '\n';
      return r.pass ? kExitOk : kExitAssertion;
    }
    return kExitConfig;
  });
}

}  // namespace flowlag::cli
