#include "cli/playbook.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <ostream>
#include <sstream>

#include "flowlag/errors.hpp"
#include "flowlag/gaussian_oracle.hpp"

namespace flowlag::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

void check(CriterionResult& r, bool ok, const std::string& what) {
  r.details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  if (!ok) r.pass = false;
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = b.norm();
  return scale > 0.0 ? (a - b).norm() / scale : (a - b).norm();
}

constexpr int kNetDim = 64;

}  // namespace

Playbook::Playbook(PlaybookOptions options) : opts_(std::move(options)) {}

std::string Playbook::name(int id) {
  switch (id) {
    case 1: return "Jensen gap strictness";
    case 2: return "boundary limits of the oracle";
    case 3: return "cross-term identity";
    case 4: return "rho concentration";
    case 5: return "schedule calibration";
    case 6: return "SSC identity and scaling";
    case 7: return "FM / MAFM gradient checks";
    case 8: return "velocity-norm signature of a trained net";
    case 9: return "MAFM effect";
    case 10: return "Frechet correctness";
    case 11: return "integration-lag harness";
    case 12: return "interpolant-path robustness";
  }
  throw ConfigError("criterion must be in 1.." + std::to_string(kCriterionCount));
}

std::string Playbook::invocation(int id) {
  name(id);
  return "flowlag verify --criterion " + std::to_string(id);
}

TrainConfig Playbook::net_config(PathKind path, LossKind loss) const {
  TrainConfig c;
  c.dataset = {DatasetKind::Gaussian, kNetDim, 1.0, 8};
  c.path = path;
  c.loss = loss;
  c.steps = opts_.train_steps;
  c.seed = opts_.seed;
  c.log_every = 1000;
  c.lr_schedule = LrSchedule::Cosine;
  return c;
}

const Checkpoint& Playbook::network(PathKind path, LossKind loss) {
  const auto key = std::make_pair(path, loss);
  if (auto it = nets_.find(key); it != nets_.end()) return it->second;

  const TrainConfig config = net_config(path, loss);
  const fs::path dir = opts_.work_dir / ("net-" + to_string(loss) + "-" + to_string(path));
  const fs::path file = dir / "checkpoint.bin";
  if (opts_.reuse && fs::exists(file)) {
    Checkpoint ckpt = load_checkpoint(file.string());
    if (ckpt.metadata == to_json(config)) {
      if (opts_.log) *opts_.log << "  reusing " << file.string() << '\n';
      return nets_.emplace(key, std::move(ckpt)).first->second;
    }
  }
  if (opts_.log)
    *opts_.log << "  training " << to_string(loss) << " / " << to_string(path) << " ("
               << config.steps << " steps)" << std::endl;
  const auto start = Clock::now();
  TrainOutputs out = run_train(config, dir.string());
  if (opts_.log) *opts_.log << "  trained in " << fmt(seconds_since(start)) << " s" << std::endl;
  return nets_.emplace(key, std::move(out.result.checkpoint)).first->second;
}

CriterionResult Playbook::run(int id) {
  CriterionResult r;
  r.id = id;
  r.name = name(id);
  r.pass = true;
  const auto start = Clock::now();
  try {
    switch (id) {
      case 1: jensen(r); break;
      case 2: boundary(r); break;
      case 3: cross_term(r); break;
      case 4: rho(r); break;
      case 5: calibration(r); break;
      case 6: ssc_identity(r, PathKind::Linear); break;
      case 7: gradients(r); break;
      case 8: norm_signature(r); break;
      case 9: mafm_effect(r); break;
      case 10: frechet(r); break;
      case 11: lag_harness(r, PathKind::Linear, true); break;
      case 12: path_robustness(r); break;
    }
  } catch (const std::exception& e) {
    check(r, false, std::string("exception: ") + e.what());
  }
  r.seconds = seconds_since(start);
  return r;
}

void Playbook::jensen(CriterionResult& r) {
  const auto start = Clock::now();
  JensenParams p;
  p.spec = {64, 1.0};
  p.times = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  p.n_mc = 100000;
  p.seed = opts_.seed;
  for (const auto& row : oracle_jensen(p)) {
    const double gap = row.gap.target_energy - row.gap.learned_energy;
    check(r, gap > 3.0 * row.gap.mc_stderr,
          "t=" + fmt(row.t) + " learned " + fmt(row.gap.learned_energy) + " < target " +
              fmt(row.gap.target_energy) + " by " + fmt(gap / row.gap.mc_stderr) + " stderr");
  }
  const double elapsed = seconds_since(start);
  check(r, elapsed < 10.0, "runtime " + fmt(elapsed) + " s < 10 s");
}

void Playbook::boundary(CriterionResult& r) {
  const GaussianFlowSpec spec{16, 1.0};
  Rng rng = make_rng(opts_.seed, "boundary");
  const Eigen::MatrixXd x = standard_normal(rng, spec.dim, 8);
  for (PathKind kind : {PathKind::Linear, PathKind::VP, PathKind::GVP}) {
    const Interpolant interp(kind);
    const auto c0 = interp.coefficients(0.0);
    const auto c1 = interp.coefficients(1.0);
    const double e0 = relative_error(oracle_velocity(spec, interp, x, 0.0), c0.d_sigma * x);
    const double e1 = relative_error(oracle_velocity(spec, interp, x, 1.0), c1.d_alpha * x);
    check(r, e0 <= 1e-12, to_string(kind) + " t=0 rel err " + fmt(e0));
    check(r, e1 <= 1e-12, to_string(kind) + " t=1 rel err " + fmt(e1));
  }
}

void Playbook::cross_term(CriterionResult& r) {
  CrossTermParams p;
  p.spec = {16, 1.0};
  p.times = {0.0, 0.25, 0.5, 0.75, 1.0};
  p.n_mc = 100000;
  p.seed = opts_.seed;
  for (const auto& row : oracle_cross_term(p)) {
    if (row.t == 0.0 || row.t == 1.0) {
      check(r, row.closed_form == 0.0, "t=" + fmt(row.t) + " closed form " + fmt(row.closed_form));
      continue;
    }
    const double dev = std::abs(row.closed_form - row.monte_carlo.mean);
    check(r, dev <= 3.0 * row.monte_carlo.std_error,
          "t=" + fmt(row.t) + " closed " + fmt(row.closed_form) + " mc " +
              fmt(row.monte_carlo.mean) + " +- " + fmt(row.monte_carlo.std_error));
  }
}

void Playbook::rho(CriterionResult& r) {
  const auto start = Clock::now();
  RhoParams p;
  p.dims = {1024, 4096};
  p.pairs = 50000;
  p.seed = opts_.seed;
  const auto rows = oracle_rho(p);
  const RhoStats& low = rows[0];
  const RhoStats& d4096 = rows[1];
  check(r, d4096.mean >= 0.0115 && d4096.mean <= 0.0135,
        "D=4096 mean " + fmt(d4096.mean) + " in [0.0115, 0.0135]");
  check(r, d4096.p99 < 0.04, "D=4096 p99 " + fmt(d4096.p99) + " < 0.04");
  check(r, d4096.max < 0.075, "D=4096 max " + fmt(d4096.max) + " < 0.075");
  const double ratio = d4096.mean / low.mean;
  check(r, std::abs(ratio - 0.5) <= 0.05,
        "mean(4096) / mean(1024) " + fmt(ratio) + " within 0.5 +- 10%");
  const double elapsed = seconds_since(start);
  check(r, elapsed < 30.0, "runtime " + fmt(elapsed) + " s < 30 s");
}

void Playbook::calibration(CriterionResult& r) {
  const ScaleSchedule lin{ScheduleShape::Linear, 1.10, 1.0};
  check(r, std::abs(lin.area() - 1.05) <= 1e-9, "area(linear 1.10->1.0) " + fmt(lin.area()));
  const double quad = schedule_area_by_quadrature(lin);
  check(r, std::abs(quad - 1.05) <= 1e-6, "quadrature area(linear) " + fmt(quad));
  const std::pair<ScheduleShape, double> cases[] = {
      {ScheduleShape::QuadIn, 1.075}, {ScheduleShape::QuadOut, 1.15}, {ScheduleShape::Cosine, 1.10}};
  for (const auto& [shape, expected] : cases) {
    const CalibrationResult c = calibrate_schedule(shape, 1.05, 1.0);
    check(r, std::abs(c.s_start - expected) <= 1e-9,
          to_string(shape) + " s_start " + fmt(c.s_start) + " (expected " + fmt(expected) + ")");
    check(r, std::abs(c.quadrature_area - 1.05) <= 1e-6,
          to_string(shape) + " quadrature area " + fmt(c.quadrature_area));
  }
}

void Playbook::ssc_identity(CriterionResult& r, PathKind path) {
  const NetworkField net = NetworkField::from_checkpoint(network(path, LossKind::Fm));
  const Interpolant interp(path);
  const ScaleSchedule unit{ScheduleShape::Linear, 1.0, 1.0};
  const std::string tag = to_string(path) + " ";

  for (SolverMethod method : {SolverMethod::Euler, SolverMethod::Heun, SolverMethod::EulerMaruyama}) {
    SolverSpec plain;
    plain.method = method;
    plain.nfe = 10;
    SolverSpec unit_spec = plain;
    unit_spec.schedule = unit;
    const Trajectory a = integrate(net, plain, interp, 512, opts_.seed);
    const Trajectory b = integrate(net, unit_spec, interp, 512, opts_.seed);
    bool same = a.states.size() == b.states.size();
    for (std::size_t k = 0; same && k < a.states.size(); ++k)
      same = (a.states[k].array() == b.states[k].array()).all();
    check(r, same, tag + to_string(method) + " s=(1.0,1.0) bitwise equal to uncorrected");
  }

  const ScaleSchedule boost{ScheduleShape::Linear, 1.2, 1.0};
  Rng rng = make_rng(opts_.seed, "ssc/scaling");
  const Eigen::MatrixXd x = standard_normal(rng, net.dim(), 64);
  bool exact = true;
  double worst = 0.0;
  for (double t : {0.0, 0.1, 0.35, 0.5, 0.8, 1.0}) {
    const Eigen::MatrixXd v = net.evaluate(x, t);
    const Eigen::MatrixXd v_hat = corrected_velocity(net, boost, x, t);
    const double g = boost.gamma(t);
    exact = exact && (v_hat.array() == (g * v).array()).all();
    const Eigen::ArrayXd nv = v.colwise().norm().transpose();
    const Eigen::ArrayXd nh = v_hat.colwise().norm().transpose();
    worst = std::max(worst, ((nh - g * nv).abs() / (g * nv)).maxCoeff());
  }
  check(r, exact, tag + "v_hat == gamma(t) v elementwise (bitwise)");
  check(r, worst <= 8 * std::numeric_limits<double>::epsilon(),
        tag + "max | ||v_hat|| / (gamma ||v||) - 1 | = " + fmt(worst));
}

void Playbook::gradients(CriterionResult& r) {
  MlpConfig cfg;
  cfg.dim = 8;
  cfg.hidden = {32, 32};
  Mlp<double> net(cfg, derive_seed(opts_.seed, "gradcheck/net"));
  const Interpolant interp(PathKind::Linear);
  Rng rng = make_rng(opts_.seed, "gradcheck/batch");
  Batch batch{standard_normal(rng, cfg.dim, 64), standard_normal(rng, cfg.dim, 64), {}};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 64; ++i) batch.t.push_back(unit(rng));

  MafmOptions mafm;
  mafm.lambda0 = 0.2;
  for (const bool use_mafm : {false, true}) {
    auto loss = [&](const Mlp<double>& m, MlpParameters<double>* g) {
      return use_mafm ? mafm_loss(m, interp, batch, mafm, g).total : fm_loss(m, interp, batch, g).total;
    };
    MlpParameters<double> grads;
    loss(net, &grads);
    const std::vector<double> g = grads.flatten();
    const std::vector<double> theta = net.parameters().flatten();
    Rng probe_rng = make_rng(opts_.seed, use_mafm ? "gradcheck/mafm" : "gradcheck/fm");
    std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);
    double worst = 0.0;
    for (int probe = 0; probe < 20; ++probe) {
      const std::size_t i = pick(probe_rng);
      const double h = 1e-5 * std::max(1.0, std::abs(theta[i]));
      std::vector<double> shifted = theta;
      Mlp<double> m = net;
      shifted[i] = theta[i] + h;
      m.parameters().unflatten(shifted);
      const double up = loss(m, nullptr);
      shifted[i] = theta[i] - h;
      m.parameters().unflatten(shifted);
      const double down = loss(m, nullptr);
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-7});
      worst = std::max(worst, std::abs(fd - g[i]) / denom);
    }
    check(r, worst < 1e-4,
          std::string(use_mafm ? "MAFM (lambda0=0.2)" : "FM") + " worst relative error over 20 probes " +
              fmt(worst));
  }
}

void Playbook::norm_signature(CriterionResult& r) {
  const Checkpoint& ckpt = network(PathKind::Linear, LossKind::Fm);
  const NormProfile p =
      checkpoint_norm_profile(ckpt, uniform_grid(20), 4000, derive_seed(opts_.seed, "signature"));
  const double root_d = std::sqrt(static_cast<double>(kNetDim));
  const double ceiling = std::sqrt(2.0 * kNetDim) * (1.0 - 0.02);
  double worst_interior = 0.0;
  double n01 = 0.0;
  double n09 = 0.0;
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    const double t = p.times[i];
    if (t > 0.0 && t < 1.0) worst_interior = std::max(worst_interior, p.mean[i]);
    if (std::abs(t - 0.1) < 1e-12) n01 = p.mean[i];
    if (std::abs(t - 0.9) < 1e-12) n09 = p.mean[i];
  }
  check(r, worst_interior < ceiling,
        "max interior mean norm " + fmt(worst_interior) + " < " + fmt(ceiling));
  check(r, n09 < n01, "norm(0.9) " + fmt(n09) + " < norm(0.1) " + fmt(n01));
  const double start_ratio = p.mean.front() / root_d;
  const double end_ratio = p.mean.back() / root_d;
  check(r, start_ratio >= 0.85 && start_ratio <= 1.15, "norm(0)/sqrt(D) " + fmt(start_ratio));
  check(r, end_ratio >= 0.85 && end_ratio <= 1.15, "norm(1)/sqrt(D) " + fmt(end_ratio));
}

void Playbook::mafm_effect(CriterionResult& r) {
  const Checkpoint& fm = network(PathKind::Linear, LossKind::Fm);
  const Checkpoint& mafm = network(PathKind::Linear, LossKind::Mafm);
  std::vector<double> early;
  for (int i = 0; i <= 6; ++i) early.push_back(0.05 * i);
  const std::uint64_t profile_seed = derive_seed(opts_.seed, "mafm-effect");
  const NormProfile pf = checkpoint_norm_profile(fm, early, 4000, profile_seed);
  const NormProfile pm = checkpoint_norm_profile(mafm, early, 4000, profile_seed);
  const double mean_fm = std::accumulate(pf.mean.begin(), pf.mean.end(), 0.0) / pf.mean.size();
  const double mean_mafm = std::accumulate(pm.mean.begin(), pm.mean.end(), 0.0) / pm.mean.size();
  check(r, mean_mafm > mean_fm,
        "mean norm over t in [0, 0.3]: MAFM " + fmt(mean_mafm) + " > FM " + fmt(mean_fm));

  // FM term of both nets on the same held-out batches.
  const Dataset data(net_config(PathKind::Linear, LossKind::Fm).dataset);
  BatchSampler sampler(data, derive_seed(opts_.seed, "mafm-effect/eval"));
  const Interpolant interp(PathKind::Linear);
  const Mlp<float> net_fm = restore_network<float>(fm);
  const Mlp<float> net_mafm = restore_network<float>(mafm);
  double loss_fm = 0.0;
  double loss_mafm = 0.0;
  constexpr int kBatches = 32;
  for (int i = 0; i < kBatches; ++i) {
    const Batch b = sampler.next(1024);
    loss_fm += fm_loss(net_fm, interp, b).fm_term / kBatches;
    loss_mafm += fm_loss(net_mafm, interp, b).fm_term / kBatches;
  }
  const double rel = std::abs(loss_mafm - loss_fm) / loss_fm;
  check(r, rel <= 0.10,
        "FM term: MAFM " + fmt(loss_mafm) + " vs FM " + fmt(loss_fm) + " (" + fmt(100 * rel) + "%)");
}

void Playbook::frechet(CriterionResult& r) {
  auto gaussian1d = [](double mean, double var) {
    MomentStats s;
    s.mean = Eigen::VectorXd::Constant(1, mean);
    s.cov = Eigen::MatrixXd::Constant(1, 1, var);
    return s;
  };
  const double shift = frechet_gaussian(gaussian1d(1.0, 1.0), gaussian1d(0.0, 1.0));
  check(r, std::abs(shift - 1.0) <= 1e-9, "N(1,1) vs N(0,1) = " + fmt(shift));
  const double scale = frechet_gaussian(gaussian1d(0.0, 1.0), gaussian1d(0.0, 4.0));
  check(r, std::abs(scale - 1.0) <= 1e-9, "N(0,1) vs N(0,4) = " + fmt(scale));

  Rng rng = make_rng(opts_.seed, "frechet");
  std::uniform_real_distribution<double> var(0.1, 3.0);
  constexpr int kDiag = 16;
  MomentStats a;
  MomentStats b;
  a.mean = standard_normal(rng, kDiag, 1);
  b.mean = standard_normal(rng, kDiag, 1);
  Eigen::VectorXd va(kDiag);
  Eigen::VectorXd vb(kDiag);
  for (int i = 0; i < kDiag; ++i) {
    va[i] = var(rng);
    vb[i] = var(rng);
  }
  a.cov = va.asDiagonal();
  b.cov = vb.asDiagonal();
  const double closed = (a.mean - b.mean).squaredNorm() +
                        (va.array().sqrt() - vb.array().sqrt()).square().sum();
  const double fd = frechet_gaussian(a, b);
  check(r, std::abs(fd - closed) <= 1e-9 * std::max(1.0, closed),
        "diagonal D=16: " + fmt(fd) + " vs closed form " + fmt(closed));

  const Eigen::MatrixXd g = standard_normal(rng, 32, 32);
  const Eigen::MatrixXd m = g * g.transpose();
  const Eigen::MatrixXd s = sqrtm_psd(m);
  const double recon = (s * s - m).norm() / m.norm();
  check(r, recon <= 1e-8, "sqrtm reconstruction (D=32) relative error " + fmt(recon));

  const Eigen::MatrixXd samples = standard_normal(rng, kNetDim, 8192);
  const double floor = split_half_noise_floor(samples);
  check(r, std::isfinite(floor) && floor > 0.0,
        "split-half noise floor (D=64, 8192 samples) " + fmt(floor));
}

void Playbook::lag_harness(CriterionResult& r, PathKind path, bool sweep_part) {
  const Checkpoint& ckpt = network(path, LossKind::Fm);
  const auto start = Clock::now();
  const TrainConfig tc = checkpoint_train_config(ckpt);
  std::string ref_name;
  const MomentStats ref = reference_moments(tc.dataset, opts_.seed, &ref_name);
  const NetworkField field = NetworkField::from_checkpoint(ckpt);
  LagSweepParams p;
  p.seed = opts_.seed;
  if (!sweep_part) {
    p.s_start = {1.0};
    p.include_reference_rows = false;
  }
  const LagSweepResult res = lag_sweep(field, Interpolant(path), ref, ref_name, p);
  const std::string tag = to_string(path) + " ";
  const double base = res.baselines.front().values.back();
  const double floor = res.floor.values.back();
  check(r, base >= 5.0 * floor,
        tag + "baseline terminal FLD " + fmt(base) + " >= 5 x floor " + fmt(floor) + " (ratio " +
            fmt(base / floor) + ")");
  if (tc.dataset.kind == DatasetKind::Gaussian) {
    // The exact field is c(t) x; when c vanishes the marginals never move and
    // no step count can lag.
    const GaussianFlowSpec spec{tc.dataset.dim, tc.dataset.data_std};
    double max_c = 0.0;
    for (int i = 0; i <= 100; ++i)
      max_c = std::max(max_c, std::abs(oracle_coefficient(spec, Interpolant(path), i / 100.0)));
    r.details.push_back("note " + tag + "max |oracle coefficient| over t " + fmt(max_c));
  }
  if (!sweep_part) return;

  const std::size_t expected_cells = p.nfe.size() * (p.s_start.size() + 2);
  bool complete = res.cells.size() == expected_cells;
  for (const auto& c : res.cells)
    complete = complete && c.report.values.size() == p.checkpoints.size() &&
               std::all_of(c.report.values.begin(), c.report.values.end(),
                           [](double v) { return std::isfinite(v); });
  check(r, complete, "report has " + std::to_string(res.cells.size()) + " complete cells");
  check(r, res.identity_matches_baseline, "identity cell bitwise equal to baseline");
  for (const auto& c : res.cells)
    r.details.push_back("     " + c.schedule.to_string() + " terminal FLD " +
                        fmt(c.report.values.back()) + " improvement " +
                        fmt(c.improvement.back()));
  check(r, res.best_terminal.front() <= base,
        "best s_start " + fmt(res.best_s_start.front()) + " terminal FLD " +
            fmt(res.best_terminal.front()) + " <= baseline " + fmt(base));
  if (res.overshoot) {
    r.details.push_back(std::string("note ") + kOvershootCaveat);
    r.details.push_back("note fail-soft: the CLI exits with code " +
                        std::to_string(kExitOvershootCaveat));
  }
  const double elapsed = seconds_since(start);
  check(r, elapsed < 300.0, "harness runtime " + fmt(elapsed) + " s < 300 s");
}

void Playbook::path_robustness(CriterionResult& r) {
  for (PathKind path : {PathKind::Linear, PathKind::VP, PathKind::GVP}) {
    ssc_identity(r, path);
    lag_harness(r, path, false);
  }
}

}  // namespace flowlag::cli
