#include <benchmark/benchmark.h>

#include "flowlag/flowlag.hpp"

using namespace flowlag;

namespace {

MlpConfig default_net(int dim) {
  MlpConfig c;
  c.dim = dim;
  return c;
}

std::vector<double> uniform_times(int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = (i + 0.5) / n;
  return t;
}

template <typename Scalar>
void BM_MlpForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const Mlp<Scalar> net(default_net(64), 1);
  Rng rng(2);
  const auto x = standard_normal(rng, 64, batch).cast<Scalar>().eval();
  const auto t = uniform_times(batch);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, t));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForward<float>)->Arg(256)->Arg(8192);
BENCHMARK(BM_MlpForward<double>)->Arg(256);

template <typename Scalar>
void BM_TrainStep(benchmark::State& state) {
  const Dataset data(DatasetSpec{DatasetKind::Gaussian, 64, 1.0, 8});
  Mlp<Scalar> net(default_net(64), 1);
  auto opt = AdamState<Scalar>::for_parameters(net.parameters(), 1e-3);
  BatchSampler sampler(data, 3);
  const Interpolant interp;
  MlpParameters<Scalar> grads;
  const bool mafm = state.range(0) != 0;
  for (auto _ : state) {
    const Batch b = sampler.next(256);
    if (mafm) {
      mafm_loss(net, interp, b, MafmOptions{}, &grads);
    } else {
      fm_loss(net, interp, b, &grads);
    }
    optimizer_step(opt, net.parameters(), grads);
  }
}
BENCHMARK(BM_TrainStep<float>)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EulerStep(benchmark::State& state) {
  const NetworkField field(Mlp<float>(default_net(64), 1));
  const ScaleSchedule s{ScheduleShape::Linear, 1.1, 1.0};
  Rng rng(4);
  const Eigen::MatrixXd x = standard_normal(rng, 64, 8192);
  for (auto _ : state) benchmark::DoNotOptimize(euler_step(field, s, x, 0.3, 0.1));
}
BENCHMARK(BM_EulerStep)->Unit(benchmark::kMillisecond);

void BM_Sqrtm(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(5);
  const Eigen::MatrixXd g = standard_normal(rng, d, d);
  const Eigen::MatrixXd m = g * g.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(sqrtm_psd(m));
}
BENCHMARK(BM_Sqrtm)->Arg(64)->Arg(256);

void BM_TrackFld(benchmark::State& state) {
  Trajectory tr;
  tr.dim = 64;
  tr.n_particles = 8192;
  tr.requested_times = tr.times = {1.0};
  Rng rng(6);
  tr.states = {standard_normal(rng, 64, 8192)};
  const auto ref = MomentStats::isotropic_gaussian(64, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(track_fld(tr, ref, "ref"));
}
BENCHMARK(BM_TrackFld)->Unit(benchmark::kMillisecond);

void BM_JensenGap(benchmark::State& state) {
  const GaussianFlowSpec spec{64, 1.0};
  const Interpolant interp;
  Rng rng(7);
  const Eigen::VectorXd x = typical_shell_point(spec, interp, 0.3, rng);
  for (auto _ : state) benchmark::DoNotOptimize(jensen_gap(spec, interp, x, 0.3, 100000, rng));
}
BENCHMARK(BM_JensenGap)->Unit(benchmark::kMillisecond);

void BM_Rho(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(rho_statistics(4096, 10000, 1.0, 8));
}
BENCHMARK(BM_Rho)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
