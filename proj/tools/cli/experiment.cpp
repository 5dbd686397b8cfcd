#include "cli/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "json_fields.hpp"

#include "flowlag/errors.hpp"

namespace flowlag::cli {

namespace fs = std::filesystem;
using detail::StrictObject;
using nlohmann::json;

namespace {

template <typename Parser>
auto parse_enum(StrictObject& obj, const std::string& key, const Parser& parser,
                std::optional<std::string> fallback = std::nullopt) {
  const std::string text =
      fallback ? obj.optional<std::string>(key, *fallback) : obj.required<std::string>(key);
  try {
    return parser(text);
  } catch (const ConfigError& e) {
    throw ConfigError(obj.field(key) + ": " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

DatasetSpec parse_dataset(StrictObject ds) {
  DatasetSpec spec;
  spec.kind = parse_enum(ds, "kind", parse_dataset_kind);
  const bool planar = spec.kind == DatasetKind::Checkerboard || spec.kind == DatasetKind::TwoMoons;
  spec.dim = planar ? ds.optional<int>("dim", 2) : ds.required<int>("dim");
  spec.data_std = ds.optional<double>("data_std", 1.0);
  spec.components = ds.optional<int>("components", 8);
  ds.finish();
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(ds.field("") + " " + e.what());
  }
  return spec;
}

SolverSpec parse_solver(StrictObject s, SolverSpec spec) {
  spec.method = parse_enum(s, "method", parse_solver_method, to_string(spec.method));
  spec.nfe = s.required<int>("nfe");
  spec.checkpoints = s.optional<std::vector<double>>("checkpoints", spec.checkpoints);
  spec.diffusion_scale = s.optional<double>("diffusion_scale", spec.diffusion_scale);
  s.finish();
  return spec;
}

GaussianFlowSpec parse_gaussian(StrictObject& o) {
  GaussianFlowSpec spec{o.required<int>("dim"), o.optional<double>("data_std", 1.0)};
  try {
    spec.validate();
  } catch (const std::exception& e) {
    throw ConfigError(o.field("dim") + ": " + e.what());
  }
  return spec;
}

template <typename T>
void validated(const T& v, const std::string& where) {
  try {
    v.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig parse_experiment_config(std::string_view json_text, const fs::path& base_dir) {
  const json j = detail::parse_json_text(json_text);
  StrictObject root(j, "");
  ExperimentConfig c;
  c.experiment = root.required<std::string>("experiment");
  c.seed = root.required<std::uint64_t>("seed");
  c.verify = root.optional<bool>("verify", false);
  if (root.has("output_dir")) c.output_dir = resolve(base_dir, root.required<std::string>("output_dir"));
  c.canonical_json = j.dump();

  const std::string& e = c.experiment;
  if (e == "train") {
    json block = j.contains("train") ? j.at("train") : json();
    root.object("train");
    if (block.is_object() && !block.contains("seed")) block["seed"] = c.seed;
    try {
      c.params = parse_train_config(block.dump());
    } catch (const ConfigError& err) {
      throw ConfigError(std::string("train.") + err.what());
    }
    if (!c.output_dir) throw ConfigError("output_dir: missing required field (train writes a checkpoint)");
  } else if (e == "sample") {
    SampleBlock b;
    auto s = root.object("sample");
    b.checkpoint = resolve(base_dir, s.required<std::string>("checkpoint"));
    b.params.particles = s.optional<int>("particles", b.params.particles);
    if (s.has("path")) b.params.path = parse_enum(s, "path", parse_path_kind);
    s.finish();
    b.params.solver = parse_solver(root.object("solver"), SolverSpec{});
    if (root.has("schedule")) {
      try {
        b.params.solver.schedule = ScaleSchedule::parse(root.required<std::string>("schedule"));
      } catch (const ConfigError& err) {
        throw ConfigError(std::string("schedule: ") + err.what());
      }
    }
    validated(b.params.solver, "solver");
    if (b.params.particles < 2) throw ConfigError("sample.particles: must be >= 2");
    b.params.seed = c.seed;
    c.params = b;
    if (!c.output_dir) throw ConfigError("output_dir: missing required field (sample writes a trajectory)");
  } else if (e == "oracle") {
    OracleBlock b;
    auto o = root.object("oracle");
    b.kind = parse_enum(o, "kind", [](std::string_view k) {
      if (k == "jensen") return OracleKind::Jensen;
      if (k == "cross-term") return OracleKind::CrossTerm;
      throw ConfigError("unknown oracle '" + std::string(k) + "' (expected jensen|cross-term)");
    });
    const GaussianFlowSpec spec = parse_gaussian(o);
    const auto times = o.required<std::vector<double>>("t");
    for (double t : times)
      if (!(t >= 0.0 && t <= 1.0)) throw ConfigError(o.field("t") + ": times must lie in [0, 1]");
    if (b.kind == OracleKind::Jensen) {
      b.jensen = {spec, parse_enum(o, "path", parse_path_kind, "linear"), times,
                  o.optional<int>("n_mc", 100000), c.seed};
      if (b.jensen.n_mc < kMinJensenSamples)
        throw ConfigError(o.field("n_mc") + ": must be >= " + std::to_string(kMinJensenSamples));
    } else {
      b.cross_term = {spec, times, o.optional<int>("n_mc", 100000), c.seed};
      if (b.cross_term.n_mc < 2) throw ConfigError(o.field("n_mc") + ": must be >= 2");
    }
    o.finish();
    c.params = b;
  } else if (e == "rho-stats") {
    RhoParams p;
    auto o = root.object("rho");
    p.dims = o.required<std::vector<int>>("dims");
    p.pairs = o.optional<int>("pairs", p.pairs);
    p.data_std = o.optional<double>("data_std", p.data_std);
    p.seed = c.seed;
    o.finish();
    if (p.dims.empty()) throw ConfigError("rho.dims: must not be empty");
    for (int d : p.dims)
      if (d < 1) throw ConfigError("rho.dims: dimensions must be >= 1");
    if (p.pairs < kMinRhoPairs)
      throw ConfigError("rho.pairs: must be >= " + std::to_string(kMinRhoPairs));
    if (!(p.data_std > 0.0)) throw ConfigError("rho.data_std: must be > 0");
    c.params = p;
  } else if (e == "diagnose") {
    DiagnoseBlock b;
    auto o = root.object("diagnose");
    b.kind = parse_enum(o, "kind", [](std::string_view k) {
      if (k == "norm") return DiagnoseKind::Norm;
      if (k == "fld") return DiagnoseKind::Fld;
      if (k == "lag") return DiagnoseKind::Lag;
      throw ConfigError("unknown diagnostic '" + std::string(k) + "' (expected norm|fld|lag)");
    });
    if (b.kind == DiagnoseKind::Norm) {
      b.checkpoint = resolve(base_dir, o.required<std::string>("checkpoint"));
      b.samples = o.optional<int>("samples", b.samples);
      b.grid_intervals = o.optional<int>("grid_intervals", b.grid_intervals);
      if (b.samples < kMinProfileSamples)
        throw ConfigError(o.field("samples") + ": must be >= " + std::to_string(kMinProfileSamples));
      if (b.grid_intervals < 1) throw ConfigError(o.field("grid_intervals") + ": must be >= 1");
    } else {
      if (b.kind == DiagnoseKind::Fld) {
        b.trajectory = resolve(base_dir, o.required<std::string>("trajectory"));
      } else {
        b.baseline = resolve(base_dir, o.required<std::string>("baseline"));
        b.corrected = resolve(base_dir, o.required<std::string>("corrected"));
      }
      if (o.has("dataset")) b.dataset = parse_dataset(o.object("dataset"));
      if (o.has("checkpoint")) b.checkpoint = resolve(base_dir, o.required<std::string>("checkpoint"));
      if (!b.dataset && b.checkpoint.empty())
        throw ConfigError(o.field("dataset") + ": missing required field (or give a checkpoint)");
    }
    o.finish();
    c.params = b;
  } else if (e == "lag-sweep") {
    LagSweepBlock b;
    auto o = root.object("lag_sweep");
    auto& p = b.params;
    b.checkpoint = resolve(base_dir, o.required<std::string>("checkpoint"));
    p.nfe = o.optional<std::vector<int>>("nfe", p.nfe);
    p.s_start = o.optional<std::vector<double>>("s_start", p.s_start);
    p.s_end = o.optional<double>("s_end", p.s_end);
    p.include_reference_rows = o.optional<bool>("include_reference_rows", p.include_reference_rows);
    p.method = parse_enum(o, "method", parse_solver_method, "euler");
    p.particles = o.optional<int>("particles", p.particles);
    p.floor_nfe = o.optional<int>("floor_nfe", p.floor_nfe);
    p.checkpoints = o.optional<std::vector<double>>("checkpoints", p.checkpoints);
    if (o.has("path")) p.path = parse_enum(o, "path", parse_path_kind);
    p.seed = c.seed;
    o.finish();
    if (p.nfe.empty()) throw ConfigError("lag_sweep.nfe: must not be empty");
    if (p.s_start.empty()) throw ConfigError("lag_sweep.s_start: must not be empty");
    for (int n : p.nfe)
      if (n < 1) throw ConfigError("lag_sweep.nfe: entries must be >= 1");
    for (double s : p.s_start)
      if (!(s > 0.0)) throw ConfigError("lag_sweep.s_start: entries must be > 0");
    if (p.floor_nfe < 1) throw ConfigError("lag_sweep.floor_nfe: must be >= 1");
    if (p.particles < 2) throw ConfigError("lag_sweep.particles: must be >= 2");
    SolverSpec probe;
    probe.checkpoints = p.checkpoints;
    validated(probe, "lag_sweep");
    c.params = b;
  } else if (e == "schedule-calibrate") {
    CalibrateBlock b;
    auto o = root.object("calibrate");
    b.shape = parse_enum(o, "shape", parse_schedule_shape);
    b.area = o.required<double>("area");
    b.s_end = o.optional<double>("s_end", b.s_end);
    o.finish();
    if (b.shape == ScheduleShape::ConstantOne)
      throw ConfigError("calibrate.shape: constant-one has no free parameter");
    c.params = b;
  } else {
    throw ConfigError("experiment: unknown experiment '" + e +
                      "' (expected train|sample|oracle|diagnose|lag-sweep|schedule-calibrate|"
                      "rho-stats)");
  }
  root.finish();
  return c;
}

namespace {

class ArtifactWriter {
 public:
  explicit ArtifactWriter(const std::optional<fs::path>& dir) : dir_(dir) {
    if (dir_) fs::create_directories(*dir_);
  }
  bool enabled() const { return dir_.has_value(); }
  std::string path(const std::string& name) {
    names_.push_back(name);
    return (*dir_ / name).string();
  }
  void table(const std::string& name, const CsvTable& t) {
    if (enabled()) t.write(path(name));
  }
  void text(const std::string& name, const std::string& body) {
    if (!enabled()) return;
    std::ofstream f(path(name), std::ios::binary);
    f << body;
    if (!f) throw std::runtime_error("cannot write " + name);
  }
  void adopt(const std::vector<std::string>& names) {
    names_.insert(names_.end(), names.begin(), names.end());
  }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::optional<fs::path> dir_;
  std::vector<std::string> names_;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

void assert_that(bool ok, bool verify, const std::string& what) {
  if (verify && !ok) throw AssertionFailure("verify: " + what);
}

DatasetSpec diagnose_dataset(const DiagnoseBlock& b) {
  if (b.dataset) return *b.dataset;
  return checkpoint_train_config(load_checkpoint(b.checkpoint.string())).dataset;
}

}  // namespace

ExperimentOutcome execute_experiment(const ExperimentConfig& c, std::ostream& out,
                                     std::ostream& err) {
  ExperimentOutcome outcome;
  ArtifactWriter art(c.output_dir);
  std::string caveat;

  if (const auto* train_cfg = std::get_if<TrainConfig>(&c.params)) {
    const TrainOutputs r = run_train(*train_cfg, c.output_dir->string());
    art.adopt(r.artifacts);
    for (const auto& rec : r.result.losses) {
      assert_that(std::isfinite(rec.loss.total), c.verify, "non-finite training loss");
    }
    if (!r.result.losses.empty())
      out << "final loss " << format_number(r.result.losses.back().loss.total) << '\n';
  } else if (const auto* s = std::get_if<SampleBlock>(&c.params)) {
    const Trajectory traj = run_sample(load_checkpoint(s->checkpoint.string()), s->params);
    for (const auto& st : traj.states) assert_that(st.allFinite(), c.verify, "non-finite sample");
    save_trajectory(traj, art.path("trajectory.bin"));
    out << "wrote " << traj.n_particles << " particles at " << traj.times.size() << " checkpoints\n";
  } else if (const auto* o = std::get_if<OracleBlock>(&c.params)) {
    if (o->kind == OracleKind::Jensen) {
      const auto rows = oracle_jensen(o->jensen);
      const CsvTable t = jensen_table(rows);
      out << t.str();
      art.table("jensen.csv", t);
      for (const auto& r : rows)
        assert_that(r.gap.learned_energy < r.gap.target_energy && !r.gap.inconclusive, c.verify,
                    "Jensen gap not resolved at t=" + format_number(r.t));
    } else {
      const auto rows = oracle_cross_term(o->cross_term);
      const CsvTable t = cross_term_table(rows);
      out << t.str();
      art.table("cross_term.csv", t);
      for (const auto& r : rows)
        assert_that(std::abs(r.closed_form - r.monte_carlo.mean) <=
                        3.0 * r.monte_carlo.std_error + 1e-12,
                    c.verify, "cross-term closed form outside 3 stderr at t=" + format_number(r.t));
    }
  } else if (const auto* p = std::get_if<RhoParams>(&c.params)) {
    const CsvTable t = rho_table(oracle_rho(*p));
    out << t.str();
    art.table("rho.csv", t);
  } else if (const auto* d = std::get_if<DiagnoseBlock>(&c.params)) {
    if (d->kind == DiagnoseKind::Norm) {
      const Checkpoint ckpt = load_checkpoint(d->checkpoint.string());
      const NormProfile prof =
          checkpoint_norm_profile(ckpt, uniform_grid(d->grid_intervals), d->samples, c.seed);
      const CsvTable t = norm_profile_table(prof);
      out << t.str();
      art.table("norm_profile.csv", t);
      art.text("norm_profile.svg",
               svg_line_chart("velocity norm", "t", "norm",
                              {{"mean ||v||", prof.times, prof.mean},
                               {"target rms", prof.times, prof.target_norm}}));
    } else {
      std::string ref_name;
      const MomentStats ref = reference_moments(diagnose_dataset(*d), c.seed, &ref_name);
      FldOptions opts;
      opts.verify = c.verify;
      if (d->kind == DiagnoseKind::Fld) {
        const FldReport rep = track_fld(load_trajectory(d->trajectory.string()), ref, ref_name, opts);
        for (const auto& w : rep.warnings) err << "warning: " << w << '\n';
        const CsvTable t = fld_table(rep);
        out << t.str();
        art.table("fld.csv", t);
      } else {
        const FldReport base = track_fld(load_trajectory(d->baseline.string()), ref, ref_name, opts);
        const FldReport corr = track_fld(load_trajectory(d->corrected.string()), ref, ref_name, opts);
        const CsvTable t = lag_table(base, corr);
        out << t.str();
        art.table("lag.csv", t);
      }
    }
  } else if (const auto* l = std::get_if<LagSweepBlock>(&c.params)) {
    const Checkpoint ckpt = load_checkpoint(l->checkpoint.string());
    const TrainConfig tc = checkpoint_train_config(ckpt);
    std::string ref_name;
    const MomentStats ref = reference_moments(tc.dataset, c.seed, &ref_name);
    const NetworkField field = NetworkField::from_checkpoint(ckpt);
    const Interpolant interp(l->params.path ? *l->params.path : tc.path);
    const LagSweepResult r = lag_sweep(field, interp, ref, ref_name, l->params);
    if (!r.identity_matches_baseline)
      throw AssertionFailure("identity schedule differs from the uncorrected baseline");
    const CsvTable t = lag_sweep_table(r);
    out << t.str();
    art.table("lag_sweep.csv", t);
    if (r.overshoot) {
      caveat = kOvershootCaveat;
      err << caveat << '\n';
      art.text("caveat.txt", caveat + "\n");
      outcome.exit_code = kExitOvershootCaveat;
    }
  } else if (const auto* k = std::get_if<CalibrateBlock>(&c.params)) {
    const CalibrationResult r = calibrate_schedule(k->shape, k->area, k->s_end);
    assert_that(std::abs(r.quadrature_area - k->area) <= 1e-6, c.verify,
                "quadrature area disagrees with the target");
    // 12 significant digits hides the last-ulp noise of the division.
    std::ostringstream shown;
    shown << std::setprecision(12) << r.s_start;
    out << "s_start = " << shown.str() << '\n';
    CsvTable t({"shape", "s_end", "area", "s_start", "quadrature_area"});
    t.add_row({to_string(r.shape), format_number(r.s_end), format_number(r.target_area),
               format_number(r.s_start), format_number(r.quadrature_area)});
    art.table("calibration.csv", t);
  }

  if (art.enabled()) {
    json manifest;
    manifest["experiment"] = c.experiment;
    manifest["config_hash"] = hex64(fnv1a64(c.canonical_json));
    manifest["seed"] = c.seed;
    manifest["code_version"] = code_version();
    manifest["verify"] = c.verify;
    manifest["artifacts"] = art.names();
    if (!caveat.empty()) manifest["caveat"] = caveat;
    art.text("config.json", json::parse(c.canonical_json).dump(2) + "\n");
    art.text("manifest.json", manifest.dump(2) + "\n");
  }
  outcome.artifacts = art.names();
  return outcome;
}

int run_guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const AssertionFailure& e) {
    err << "assertion failed: " << e.what() << '\n';
    return kExitAssertion;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run_experiment_file(const fs::path& path, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    const ExperimentConfig c = parse_experiment_config(read_text_file(path), path.parent_path());
    return execute_experiment(c, out, err).exit_code;
  });
}

}  // namespace flowlag::cli
