#include <filesystem>

#include <gtest/gtest.h>

#include "flowlag/checkpoint.hpp"
#include "flowlag/errors.hpp"
#include "flowlag/rng.hpp"

using namespace flowlag;

namespace {

Checkpoint sample_checkpoint() {
  MlpConfig c;
  c.dim = 4;
  c.hidden = {8};
  c.activation = Activation::Tanh;
  Mlp<float> net(c, 3);
  AdamState<float> opt = AdamState<float>::for_parameters(net.parameters(), 2e-3);
  MlpParameters<float> g = net.parameters();
  optimizer_step(opt, net.parameters(), g);
  Rng rng(5);
  rng.discard(17);
  return make_checkpoint(net, opt, serialize_rng(rng), 1, R"({"note":"x"})");
}

}  // namespace

TEST(Checkpoint, RoundTripIsExact) {
  const Checkpoint a = sample_checkpoint();
  const Checkpoint b = decode_checkpoint(encode_checkpoint(a));
  EXPECT_EQ(encode_checkpoint(a), encode_checkpoint(b));
  EXPECT_EQ(b.config.hidden, a.config.hidden);
  EXPECT_EQ(b.config.activation, Activation::Tanh);
  EXPECT_EQ(b.precision, Precision::Float32);
  EXPECT_EQ(b.step, 1);
  EXPECT_EQ(b.metadata, a.metadata);
  EXPECT_EQ(b.optimizer.step, 1);
  EXPECT_EQ(b.optimizer.learning_rate, 2e-3);

  const Mlp<float> net = restore_network<float>(b);
  EXPECT_EQ(net.parameters().cast<double>().flatten(), a.params.flatten());
  const AdamState<float> opt = restore_optimizer<float>(b);
  EXPECT_EQ(opt.first_moment.cast<double>().flatten(), a.optimizer.first_moment.flatten());

  Rng expected(5);
  expected.discard(17);
  EXPECT_EQ(deserialize_rng(b.rng_state)(), expected());
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "flowlag_ckpt_test.bin";
  const Checkpoint a = sample_checkpoint();
  save_checkpoint(a, path.string());
  EXPECT_EQ(encode_checkpoint(load_checkpoint(path.string())), encode_checkpoint(a));
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruptInput) {
  std::string bytes = encode_checkpoint(sample_checkpoint());
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() / 2)), FormatError);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), FormatError);
  EXPECT_THROW(decode_checkpoint(bytes + "trailing"), FormatError);
  EXPECT_THROW(load_checkpoint("/nonexistent/flowlag.bin"), std::runtime_error);
}
