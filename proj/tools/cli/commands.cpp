#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "flowlag/errors.hpp"

namespace flowlag::cli {

namespace fs = std::filesystem;

std::string code_version() { return "flowlag 0.1.0"; }

namespace {

std::vector<std::string> times_header(const std::string& lead, const std::vector<double>& times,
                                      const std::string& prefix) {
  std::vector<std::string> h{lead};
  for (double t : times) h.push_back(prefix + format_number(t));
  return h;
}

}  // namespace

std::vector<JensenRow> oracle_jensen(const JensenParams& p) {
  p.spec.validate();
  const Interpolant interp(p.path);
  std::vector<JensenRow> rows;
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    const double t = p.times[i];
    check_unit_time(t);
    Rng point_rng = make_rng(p.seed, "jensen/point/" + std::to_string(i));
    Rng mc_rng = make_rng(p.seed, "jensen/mc/" + std::to_string(i));
    const Eigen::VectorXd x = typical_shell_point(p.spec, interp, t, point_rng);
    rows.push_back({t, jensen_gap(p.spec, interp, x, t, p.n_mc, mc_rng)});
  }
  return rows;
}

CsvTable jensen_table(const std::vector<JensenRow>& rows) {
  CsvTable table({"t", "learned_energy", "target_energy", "mc_stderr", "inconclusive"});
  for (const auto& r : rows)
    table.add_row({format_number(r.t), format_number(r.gap.learned_energy),
                   format_number(r.gap.target_energy), format_number(r.gap.mc_stderr),
                   r.gap.inconclusive ? "1" : "0"});
  return table;
}

std::vector<CrossTermRow> oracle_cross_term(const CrossTermParams& p) {
  p.spec.validate();
  const Interpolant interp(PathKind::Linear);
  std::vector<CrossTermRow> rows;
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    const double t = p.times[i];
    check_unit_time(t);
    Rng point_rng = make_rng(p.seed, "cross/point/" + std::to_string(i));
    Rng mc_rng = make_rng(p.seed, "cross/mc/" + std::to_string(i));
    const Eigen::MatrixXd x0 = standard_normal(point_rng, p.spec.dim, 1);
    const Eigen::MatrixXd x1 = standard_normal(point_rng, p.spec.dim, 1) * p.spec.data_std;
    const Eigen::VectorXd xt = interp.sample_xt(x0, x1, t).col(0);
    rows.push_back({t, cross_term_expectation(p.spec, interp, xt, t),
                    cross_term_monte_carlo(p.spec, interp, xt, t, p.n_mc, mc_rng)});
  }
  return rows;
}

CsvTable cross_term_table(const std::vector<CrossTermRow>& rows) {
  CsvTable table({"t", "closed_form", "mc_mean", "mc_stderr"});
  for (const auto& r : rows)
    table.add_row({format_number(r.t), format_number(r.closed_form),
                   format_number(r.monte_carlo.mean), format_number(r.monte_carlo.std_error)});
  return table;
}

std::vector<RhoStats> oracle_rho(const RhoParams& p) {
  std::vector<RhoStats> rows;
  for (int d : p.dims)
    rows.push_back(rho_statistics(d, p.pairs, p.data_std, derive_seed(p.seed, std::to_string(d))));
  return rows;
}

CsvTable rho_table(const std::vector<RhoStats>& rows) {
  CsvTable table({"D", "mean_rho", "p99_rho", "max_rho"});
  for (const auto& r : rows)
    table.add_row({std::to_string(r.dim), format_number(r.mean), format_number(r.p99),
                   format_number(r.max)});
  return table;
}

double schedule_area_by_quadrature(const ScaleSchedule& schedule, int intervals) {
  if (intervals < 2 || intervals % 2 != 0) throw ConfigError("quadrature needs an even interval count");
  const double h = 1.0 / intervals;
  double sum = schedule.gamma(0.0) + schedule.gamma(1.0);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * schedule.gamma(i * h);
  return sum * h / 3.0;
}

CalibrationResult calibrate_schedule(ScheduleShape shape, double target_area, double s_end) {
  CalibrationResult r{shape, s_end, target_area, calibrate_s_start(shape, s_end, target_area), 0.0};
  r.quadrature_area = schedule_area_by_quadrature({shape, r.s_start, s_end});
  return r;
}

TrainConfig checkpoint_train_config(const Checkpoint& ckpt) {
  if (ckpt.metadata.empty()) throw FormatError("checkpoint has no training metadata");
  return parse_train_config(ckpt.metadata);
}

std::vector<double> uniform_grid(int intervals) {
  std::vector<double> grid;
  for (int i = 0; i <= intervals; ++i) grid.push_back(static_cast<double>(i) / intervals);
  return grid;
}

NormProfile checkpoint_norm_profile(const Checkpoint& ckpt, const std::vector<double>& grid,
                                    int n_samples, std::uint64_t seed) {
  const TrainConfig config = checkpoint_train_config(ckpt);
  const Dataset data(config.dataset);
  const NetworkField field = NetworkField::from_checkpoint(ckpt);
  return norm_profile(field, Interpolant(config.path),
                      [&](int n, Rng& rng) { return data.sample(n, rng); }, grid, n_samples, seed);
}

TrainOutputs run_train(const TrainConfig& config, const std::string& out_dir) {
  config.validate();
  fs::create_directories(out_dir);
  TrainOutputs out;
  const Dataset data(config.dataset);
  const Interpolant interp(config.path);
  const std::vector<double> grid = uniform_grid(20);

  TrainHooks hooks;
  hooks.divergence_snapshot_path = (fs::path(out_dir) / "divergence.bin").string();
  hooks.on_profile = [&](std::int64_t step, const VelocityField& field) {
    const NormProfile p = norm_profile(
        field, interp, [&](int n, Rng& rng) { return data.sample(n, rng); }, grid, 2000,
        derive_seed(config.seed, "profile"));
    const std::string name = "norm_profile_" + std::to_string(step) + ".csv";
    norm_profile_table(p).write((fs::path(out_dir) / name).string());
    out.artifacts.push_back(name);
  };
  out.result = train(config, hooks);

  save_checkpoint(out.result.checkpoint, (fs::path(out_dir) / "checkpoint.bin").string());
  out.artifacts.push_back("checkpoint.bin");

  CsvTable loss({"step", "fm_term", "magnitude_term", "total"});
  for (const auto& r : out.result.losses)
    loss.add_row({std::to_string(r.step), format_number(r.loss.fm_term),
                  format_number(r.loss.magnitude_term), format_number(r.loss.total)});
  loss.write((fs::path(out_dir) / "loss.csv").string());
  out.artifacts.push_back("loss.csv");

  const bool final_profiled =
      config.profile_every > 0 && config.steps % config.profile_every == 0;
  if (!final_profiled) {
    const NetworkField field = NetworkField::from_checkpoint(out.result.checkpoint);
    hooks.on_profile(config.steps, field);
  }
  return out;
}

Trajectory run_sample(const Checkpoint& ckpt, const SampleParams& p) {
  p.solver.validate();
  const PathKind path = p.path ? *p.path : checkpoint_train_config(ckpt).path;
  const NetworkField field = NetworkField::from_checkpoint(ckpt);
  return integrate(field, p.solver, Interpolant(path), p.particles, p.seed);
}

MomentStats reference_moments(const DatasetSpec& spec, std::uint64_t seed, std::string* name) {
  const Dataset data(spec);
  if (const auto g = data.gaussian()) {
    if (name) *name = "analytic N(0, " + format_number(g->data_std * g->data_std) + " I)";
    return MomentStats::isotropic_gaussian(g->dim, g->data_std);
  }
  Rng rng = make_rng(seed, "reference");
  if (name)
    *name = "empirical " + to_string(spec.kind) + " (" +
            std::to_string(kEmpiricalReferenceSamples) + " samples)";
  return MomentStats::from_samples(data.sample(kEmpiricalReferenceSamples, rng));
}

CsvTable lag_table(const FldReport& baseline, const FldReport& corrected) {
  const std::vector<double> delta = lag_improvement(baseline, corrected);
  CsvTable table({"t", "value", "stderr", "baseline_fld", "corrected_fld"});
  for (std::size_t i = 0; i < delta.size(); ++i) {
    // Treats the two runs as independent, which overstates the error when
    // they share initial noise.
    const double b = baseline.values[i];
    const double c = corrected.values[i];
    const double se_b = i < baseline.std_errors.size() ? baseline.std_errors[i] : NAN;
    const double se_c = i < corrected.std_errors.size() ? corrected.std_errors[i] : NAN;
    const double se = std::hypot(se_c / b, c * se_b / (b * b));
    table.add_row({format_number(baseline.times[i]), format_number(delta[i]), format_number(se),
                   format_number(b), format_number(c)});
  }
  return table;
}

LagSweepResult lag_sweep(const VelocityField& field, const Interpolant& interp,
                         const MomentStats& reference, const std::string& reference_name,
                         const LagSweepParams& p) {
  if (p.nfe.empty() || p.s_start.empty()) throw ConfigError("lag sweep: empty grid");
  if (p.particles < 2) throw ConfigError("lag sweep: particles must be >= 2");
  LagSweepResult r;
  r.reference = reference_name;
  r.nfe = p.nfe;
  r.floor_nfe = p.floor_nfe;

  // Same initial noise for every cell.
  Rng init_rng = make_rng(p.seed, "sample/init");
  const Eigen::MatrixXd initial = standard_normal(init_rng, field.dim(), p.particles);

  auto run = [&](int nfe, const ScaleSchedule& schedule) {
    SolverSpec spec;
    spec.method = p.method;
    spec.nfe = nfe;
    spec.schedule = schedule;
    spec.checkpoints = p.checkpoints;
    spec.validate();
    return integrate_from(field, spec, interp, initial, p.seed);
  };

  {
    const Trajectory floor = run(p.floor_nfe, ScaleSchedule::identity());
    r.floor = track_fld(floor, reference, reference_name);
  }

  std::vector<std::pair<double, double>> rows;
  for (double s : p.s_start) rows.emplace_back(s, p.s_end);
  if (p.include_reference_rows) {
    rows.emplace_back(1.0, 1.1);
    rows.emplace_back(1.05, 1.05);
  }

  for (int nfe : p.nfe) {
    const Trajectory base_traj = run(nfe, ScaleSchedule::identity());
    const FldReport base = track_fld(base_traj, reference, reference_name);
    r.baselines.push_back(base);

    double best_s = 1.0;
    double best_terminal = base.values.back();
    for (const auto& [s_start, s_end] : rows) {
      const ScaleSchedule schedule{ScheduleShape::Linear, s_start, s_end};
      const Trajectory traj = run(nfe, schedule);
      if (s_start == 1.0 && s_end == 1.0) {
        for (std::size_t k = 0; k < traj.states.size(); ++k)
          if (!(traj.states[k].array() == base_traj.states[k].array()).all())
            r.identity_matches_baseline = false;
      }
      LagCell cell{nfe, schedule, track_fld(traj, reference, reference_name), {}};
      cell.improvement = lag_improvement(base, cell.report);
      const bool swept = s_end == p.s_end &&
                         std::find(p.s_start.begin(), p.s_start.end(), s_start) != p.s_start.end();
      if (swept && s_start > 1.0 && cell.report.values.back() < best_terminal) {
        best_terminal = cell.report.values.back();
        best_s = s_start;
      }
      r.cells.push_back(std::move(cell));
    }
    r.best_s_start.push_back(best_s);
    r.best_terminal.push_back(best_terminal);
    if (best_s == 1.0) r.overshoot = true;
  }
  return r;
}

CsvTable lag_sweep_table(const LagSweepResult& r) {
  const std::vector<double>& times = r.floor.times;
  std::vector<std::string> header{"nfe", "schedule", "s_start", "s_end"};
  for (double t : times) header.push_back("fld_t" + format_number(t));
  for (double t : times) header.push_back("improvement_t" + format_number(t));
  CsvTable table(header);

  auto add = [&](int nfe, const std::string& name, double s0, double s1, const FldReport& rep,
                 const std::vector<double>& imp) {
    std::vector<std::string> row{std::to_string(nfe), name, format_number(s0), format_number(s1)};
    for (double v : rep.values) row.push_back(format_number(v));
    for (double v : imp) row.push_back(format_number(v));
    table.add_row(std::move(row));
  };

  const std::vector<double> zeros(times.size(), 0.0);
  add(r.floor_nfe, "floor", 1.0, 1.0, r.floor, zeros);
  for (std::size_t i = 0; i < r.baselines.size(); ++i)
    add(r.nfe[i], "baseline", 1.0, 1.0, r.baselines[i], zeros);
  for (const auto& c : r.cells)
    add(c.nfe, c.schedule.to_string(), c.schedule.s_start, c.schedule.s_end, c.report,
        c.improvement);
  return table;
}

}  // namespace flowlag::cli
