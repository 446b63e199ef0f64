#include <doctest.h>

#include "../gradcheck.hpp"

#include "itr/checkpoint.hpp"
#include "itr/errors.hpp"
#include "itr/optim.hpp"
#include "itr/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace itr;
namespace fs = std::filesystem;

TEST_CASE("adadelta first step for unit gradient") {
  Parameter<double> p("x", Tensor<double>::Zero(1, 1));
  p.grad(0, 0) = 1.0;
  AdaDeltaSlot<double> slot;
  AdaDeltaConfig cfg;
  REQUIRE(adadelta_step(p, slot, cfg));
  const double expected = -0.5 * std::sqrt(1e-6) / std::sqrt(0.05 + 1e-6);
  CHECK(p.value(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(p.value(0, 0) + 2.236e-3) < 1e-6);
}

TEST_CASE("adadelta skips non-finite gradients and frozen parameters") {
  Parameter<float> p("x", Tensor<float>::Ones(2, 1));
  p.grad(1, 0) = std::nanf("");
  AdaDeltaSlot<float> slot;
  CHECK_FALSE(adadelta_step(p, slot, AdaDeltaConfig{}));
  CHECK(p.value(0, 0) == 1.0f);
  Parameter<float> frozen("f", Tensor<float>::Ones(1, 1), false);
  frozen.grad(0, 0) = 1.0f;
  AdaDelta<float> opt;
  opt.step({&frozen});
  CHECK(frozen.value(0, 0) == 1.0f);
  AdaDeltaConfig bad;
  bad.rho = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("gradient clipping rescales to the global norm") {
  Parameter<double> a("a", Tensor<double>::Zero(1, 1));
  Parameter<double> b("b", Tensor<double>::Zero(1, 1));
  a.grad(0, 0) = 3.0;
  b.grad(0, 0) = 4.0;
  const std::vector<Parameter<double>*> ps = {&a, &b};
  CHECK(global_grad_norm(ps) == doctest::Approx(5.0));
  CHECK(clip_gradients(ps, 1.0) == doctest::Approx(5.0));
  CHECK(global_grad_norm(ps) == doctest::Approx(1.0));
  CHECK(a.grad(0, 0) == doctest::Approx(0.6));
  clip_gradients(ps, 10.0);
  CHECK(global_grad_norm(ps) == doctest::Approx(1.0));
}

TEST_CASE("advantages in both forms") {
  DetachedStats st{{0.5, 0.5}, {0.2, 0.6}};
  // b = 0.4
  const auto mul = advantages(st, Advantage::Multiplicative);
  CHECK(mul[0] == doctest::Approx(-0.5));
  CHECK(mul[1] == doctest::Approx(0.5));
  const auto add = advantages(st, Advantage::Additive);
  CHECK(add[0] == doctest::Approx(-0.2));
  CHECK(add[1] == doctest::Approx(0.2));
  DetachedStats zero{{0.3, 0.7}, {0.0, 0.0}};
  CHECK(advantages(zero, Advantage::Multiplicative) == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(parse_advantage("ratio"), ConfigError);
}

TEST_CASE("instance loss: answer term weights turns by pi and fixed policy drops the gate term") {
  Rng rng(6);
  auto s = testing::toy_setup(0, rng);
  auto p = ModelParams<double>::init(s.cfg, s.vocab.word_count(), s.vocab.char_count(), rng);
  Tape<double> tape;
  auto fw = forward(tape, p, s.cfg, s.question, s.passage, false);
  auto loss = instance_loss(tape, fw.episode, s.gold, LossConfig{}, false);
  double expected = 0.0;
  for (std::size_t t = 0; t < 5; ++t) {
    const auto& r = fw.episode.trace.turns[t];
    expected -= r.pi * (std::log(r.ys(2)) + std::log(r.ye(4)));
    CHECK(loss.stats.reward[t] == doctest::Approx(r.ys(2) * r.ye(4)));
  }
  CHECK(loss.answer.item() == doctest::Approx(expected));
  CHECK(loss.termination.valid());

  auto f = testing::toy_setup(5, rng);
  auto q = ModelParams<double>::init(f.cfg, f.vocab.word_count(), f.vocab.char_count(), rng);
  Tape<double> t2;
  auto fw2 = forward(t2, q, f.cfg, f.question, f.passage, false);
  auto l2 = instance_loss(t2, fw2.episode, f.gold, LossConfig{}, true);
  CHECK_FALSE(l2.termination.valid());
  const auto& last = fw2.episode.trace.turns.back();
  CHECK(l2.total.item() == doctest::Approx(-(std::log(last.ys(2)) + std::log(last.ye(4)))));
}

TEST_CASE("checkpoint round trip and validation") {
  const auto path = fs::temp_directory_path() / "itr_unit_ckpt.itr";
  Parameter<float> a("a", Tensor<float>::Random(3, 2));
  Parameter<float> b("b", Tensor<float>::Random(1, 4));
  save_parameters(path, kModelMagic, {&a, &b});
  Parameter<float> a2("a", Tensor<float>::Zero(3, 2));
  Parameter<float> b2("b", Tensor<float>::Zero(1, 4));
  load_parameters(path, kModelMagic, {&a2, &b2});
  CHECK(a2.value == a.value);
  CHECK(b2.value == b.value);
  const auto tensors = read_checkpoint(path, kModelMagic);
  REQUIRE(tensors.size() == 2);
  CHECK(tensors[0].name == "a");
  Parameter<float> wrong("a", Tensor<float>::Zero(2, 3));
  CHECK_THROWS_AS(load_parameters(path, kModelMagic, {&wrong, &b2}), ConfigError);
  Parameter<float> renamed("z", Tensor<float>::Zero(3, 2));
  CHECK_THROWS_AS(load_parameters(path, kModelMagic, {&renamed, &b2}), ConfigError);
  CHECK_THROWS(read_checkpoint(path, kRankerMagic));
  // Header bytes: magic, version 1, count 2.
  std::ifstream in(path, std::ios::binary);
  char head[12];
  in.read(head, 12);
  CHECK(std::string(head, 4) == "ITR1");
  CHECK(head[4] == 1);
  CHECK(head[8] == 2);
  // Truncated file.
  fs::resize_file(path, 20);
  CHECK_THROWS(read_checkpoint(path, kModelMagic));
}

TEST_CASE("training config validation and loss curve format") {
  TrainConfig tc;
  tc.batch_size = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  std::vector<EpochStats> curve(1);
  curve[0].epoch = 1;
  curve[0].train_loss = 2.5;
  curve[0].dev_em = 0.5;
  curve[0].dev_f1 = 0.75;
  curve[0].dev_loss = 1.0;
  const auto path = fs::temp_directory_path() / "itr_unit_curve.csv";
  write_loss_curve(curve, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,split,loss,EM,F1");
  std::getline(in, line);
  CHECK(line == "1,train,2.500000,,");
  std::getline(in, line);
  CHECK(line == "1,dev,1.000000,0.500000,0.750000");
}
