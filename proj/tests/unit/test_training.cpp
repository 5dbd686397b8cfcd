#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "flowlag/errors.hpp"
#include "flowlag/training.hpp"

using namespace flowlag;

namespace {

double simpson(const std::function<double(double)>& f, int n = 2000) {
  const double h = 1.0 / n;
  double s = f(0.0) + f(1.0);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

Batch random_batch(int dim, int n, Rng& rng) {
  Batch b{standard_normal(rng, dim, n), standard_normal(rng, dim, n), {}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i) b.t.push_back(u(rng));
  return b;
}

const char* kMinimalConfig = R"({
  "dataset": {"kind": "gaussian", "dim": 8},
  "path": "linear", "loss": "fm", "steps": 10, "seed": 1
})";

}  // namespace

TEST(MafmWeight, ShapesIntegrateToHalfLambdaAndVanishAtOne) {
  for (MafmShape s : {MafmShape::Linear, MafmShape::Cosine, MafmShape::QuadIn, MafmShape::QuadOut}) {
    EXPECT_NEAR(simpson([&](double t) { return mafm_weight(t, s, 0.2); }), 0.1, 1e-10) << to_string(s);
    EXPECT_NEAR(mafm_weight(1.0, s, 0.2), 0.0, 1e-15);
    EXPECT_GE(mafm_weight(0.5, s, 0.2), 0.0);
  }
  EXPECT_DOUBLE_EQ(mafm_weight(0.0, MafmShape::Linear, 0.2), 0.2);
  EXPECT_DOUBLE_EQ(mafm_weight(0.0, MafmShape::QuadIn, 0.2), 0.15);
}

TEST(Loss, FmIsMeanSquaredResidual) {
  MlpConfig c;
  c.dim = 3;
  c.hidden = {8};
  const Mlp<double> net(c, 1);
  Rng rng(2);
  const Batch b = random_batch(3, 5, rng);
  const Interpolant p;
  double expected = 0.0;
  for (int j = 0; j < 5; ++j) {
    const Eigen::VectorXd x0 = b.x0.col(j), x1 = b.x1.col(j);
    const Eigen::VectorXd xt = p.sample_xt(x0, x1, b.t[j]);
    const Eigen::VectorXd v = net.forward(xt, b.t[j]);
    expected += (v - p.target_velocity(x0, x1, b.t[j])).squaredNorm() / 5;
  }
  const LossValue l = fm_loss(net, p, b);
  EXPECT_NEAR(l.total, expected, 1e-12);
  EXPECT_EQ(l.magnitude_term, 0.0);
}

TEST(Loss, GradientsMatchFiniteDifferences) {
  MlpConfig c;
  c.dim = 4;
  c.hidden = {16, 16};
  const Mlp<double> net(c, 3);
  Rng rng(4);
  const Batch b = random_batch(4, 32, rng);
  const Interpolant p(PathKind::GVP);
  MafmOptions opts;
  for (MagnitudeTarget target : {MagnitudeTarget::EndpointDifference, MagnitudeTarget::TargetVelocity}) {
    opts.magnitude_target = target;
    for (bool mafm : {false, true}) {
      auto loss = [&](const Mlp<double>& m, MlpParameters<double>* g) {
        return mafm ? mafm_loss(m, p, b, opts, g).total : fm_loss(m, p, b, g).total;
      };
      MlpParameters<double> grads;
      loss(net, &grads);
      const std::vector<double> g = grads.flatten();
      const std::vector<double> theta = net.parameters().flatten();
      std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);
      for (int probe = 0; probe < 20; ++probe) {
        const std::size_t i = pick(rng);
        Mlp<double> m = net;
        std::vector<double> th = theta;
        const double h = 1e-5;
        th[i] += h;
        m.parameters().unflatten(th);
        const double up = loss(m, nullptr);
        th[i] -= 2 * h;
        m.parameters().unflatten(th);
        const double down = loss(m, nullptr);
        const double fd = (up - down) / (2 * h);
        EXPECT_LT(std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-7}), 1e-4);
      }
    }
  }
}

TEST(Loss, MafmAddsWeightedMagnitudePenalty) {
  MlpConfig c;
  c.dim = 2;
  c.hidden = {4};
  c.zero_init_output = true;  // v = 0, so the penalty is lambda(t) ||x1 - x0||^2
  const Mlp<double> net(c, 5);
  Rng rng(6);
  const Batch b = random_batch(2, 6, rng);
  const Interpolant p;
  double penalty = 0.0;
  for (int j = 0; j < 6; ++j)
    penalty += mafm_weight(b.t[j], MafmShape::Linear, 0.2) * (b.x1.col(j) - b.x0.col(j)).squaredNorm() / 6;
  const LossValue l = mafm_loss(net, p, b, MafmOptions{});
  EXPECT_NEAR(l.magnitude_term, penalty, 1e-12);
  EXPECT_NEAR(l.total, l.fm_term + l.magnitude_term, 1e-12);
  // Zero output: the norm subgradient is zero and gradients stay finite.
  MlpParameters<double> g;
  mafm_loss(net, p, b, MafmOptions{}, &g);
  EXPECT_TRUE(g.all_finite());
}

TEST(Loss, EmptyBatchIsAConfigError) {
  MlpConfig c;
  c.dim = 2;
  c.hidden = {4};
  const Mlp<double> net(c, 5);
  EXPECT_THROW(fm_loss(net, Interpolant(), Batch{}), ConfigError);
}

TEST(TrainConfig, StrictParsing) {
  const TrainConfig c = parse_train_config(kMinimalConfig);
  EXPECT_EQ(c.dataset.dim, 8);
  EXPECT_EQ(c.batch_size, 256);
  EXPECT_EQ(c.precision, Precision::Float32);

  auto message = [](const std::string& text) {
    try {
      parse_train_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(R"({"dataset": {"kind": "gaussian", "dim": 8}, "path": "linear", "loss": "fm",
      "steps": 10, "seed": 1, "stesp": 3})").find("stesp"), std::string::npos);
  EXPECT_NE(message(R"({"dataset": {"kind": "gaussian", "dim": 8}, "path": "linear", "loss": "fm",
      "seed": 1})").find("steps"), std::string::npos);
  EXPECT_NE(message(R"({"dataset": {"kind": "gaussian", "dim": "8"}, "path": "linear", "loss": "fm",
      "steps": 10, "seed": 1})").find("dataset.dim"), std::string::npos);
  EXPECT_NE(message(R"({"dataset": {"kind": "gaussian", "dim": 8, "extra": 1}, "path": "linear",
      "loss": "fm", "steps": 10, "seed": 1})").find("dataset.extra"), std::string::npos);
  EXPECT_NE(message("{not json").find("invalid JSON"), std::string::npos);
}

TEST(TrainConfig, CanonicalJsonRoundTrips) {
  TrainConfig c = parse_train_config(kMinimalConfig);
  c.loss = LossKind::Mafm;
  c.mafm.shape = MafmShape::QuadOut;
  c.hidden = {32, 16};
  c.lr_schedule = LrSchedule::Cosine;
  const std::string text = to_json(c);
  EXPECT_EQ(to_json(parse_train_config(text)), text);
}

TEST(LearningRate, CosineDecaysFromBaseTowardZero) {
  EXPECT_EQ(scheduled_learning_rate(LrSchedule::Constant, 1e-3, 77, 100), 1e-3);
  EXPECT_EQ(scheduled_learning_rate(LrSchedule::Cosine, 1e-3, 1, 100), 1e-3);
  EXPECT_NEAR(scheduled_learning_rate(LrSchedule::Cosine, 1e-3, 51, 100), 5e-4, 1e-18);
  // 0.5 (1 + cos(99 pi / 100))
  EXPECT_NEAR(scheduled_learning_rate(LrSchedule::Cosine, 1.0, 100, 100), 2.4671981713419e-4,
              1e-15);
  double prev = 2.0;
  for (int s = 1; s <= 100; ++s) {
    const double lr = scheduled_learning_rate(LrSchedule::Cosine, 1.0, s, 100);
    EXPECT_LT(lr, prev);
    EXPECT_GT(lr, 0.0);
    prev = lr;
  }
  EXPECT_THROW(scheduled_learning_rate(LrSchedule::Cosine, 1.0, 0, 100), DomainError);
  EXPECT_THROW(scheduled_learning_rate(LrSchedule::Cosine, 1.0, 101, 100), DomainError);
  EXPECT_THROW(parse_lr_schedule("step"), ConfigError);
}

TEST(BatchSampler, SameSeedSameBatches) {
  const Dataset data(DatasetSpec{DatasetKind::Gaussian, 4, 1.0, 8});
  BatchSampler a(data, 7), b(data, 7), c(data, 8);
  const Batch ba = a.next(16), bb = b.next(16), bc = c.next(16);
  EXPECT_EQ(ba.x0, bb.x0);
  EXPECT_EQ(ba.x1, bb.x1);
  EXPECT_EQ(ba.t, bb.t);
  EXPECT_NE(ba.x0, bc.x0);
  for (double t : ba.t) EXPECT_TRUE(t >= 0.0 && t <= 1.0);
}

TEST(Train, ApproachesIrreducibleLoss) {
  // Linear path, sigma_1 = 1: the FM loss cannot go below
  // D * int_0^1 dt / (t^2 + (1 - t)^2) = D * pi / 2.
  TrainConfig c = parse_train_config(kMinimalConfig);
  c.steps = 1500;
  c.hidden = {64, 64};
  c.log_every = 250;
  const double floor = simpson([](double t) { return 1.0 / (t * t + (1 - t) * (1 - t)); }) * 8;
  EXPECT_NEAR(floor, 8 * M_PI / 2, 1e-8);

  const TrainResult r = train(c);
  ASSERT_EQ(r.losses.size(), 6u);
  EXPECT_LT(r.losses.back().loss.total, r.losses.front().loss.total);
  EXPECT_GT(r.losses.back().loss.total, 0.9 * floor);
  EXPECT_LT(r.losses.back().loss.total, 1.2 * floor);
  EXPECT_EQ(r.checkpoint.step, 1500);

  // Same config, same bytes.
  EXPECT_EQ(encode_checkpoint(train(c).checkpoint), encode_checkpoint(r.checkpoint));
}
