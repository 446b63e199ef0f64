#include <doctest.h>

#include "../gradcheck.hpp"

#include "itr/errors.hpp"
#include "itr/model.hpp"

#include <numeric>

using namespace itr;

namespace {

TurnTrace trace_of(const std::vector<double>& tau, const std::vector<std::pair<std::size_t, std::size_t>>& argmax) {
  TurnTrace tr;
  const auto pi = stop_distribution(tau);
  for (std::size_t t = 0; t < tau.size(); ++t) {
    TurnRecord r;
    r.tau = tau[t];
    r.pi = pi[t];
    r.argmax_start = argmax[t].first;
    r.argmax_end = argmax[t].second;
    tr.turns.push_back(r);
  }
  tr.state_updates = tau.size();
  return tr;
}

}  // namespace

TEST_CASE("mode names map to turn policies") {
  CHECK(parse_mode("single", 5).is_fixed());
  CHECK(parse_mode("single", 5).turns == 1);
  CHECK(parse_mode("fixed-5", 5).turns == 5);
  CHECK(parse_mode("fixed-3", 5).is_fixed());
  CHECK_FALSE(parse_mode("dynamic", 4).is_fixed());
  CHECK(parse_mode("dynamic", 4).turns == 4);
  CHECK(to_string(parse_mode("fixed-2", 5)) == "fixed-2");
  CHECK_THROWS_AS(parse_mode("fixed-0", 5), ConfigError);
  CHECK_THROWS_AS(parse_mode("sometimes", 5), ConfigError);
  CHECK_THROWS_AS(parse_stop_rule("maybe"), ConfigError);
}

TEST_CASE("stop distribution is geometric for constant one half") {
  const auto pi = stop_distribution({0.5, 0.5, 0.5, 0.5, 1.0});
  const std::vector<double> expected = {0.5, 0.25, 0.125, 0.0625, 0.0625};
  for (std::size_t t = 0; t < 5; ++t) CHECK(pi[t] == doctest::Approx(expected[t]));
  CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("best span maximizes the product within the length cap") {
  Eigen::VectorXd ys(4), ye(4);
  ys << 0.1, 0.6, 0.2, 0.1;
  ye << 0.7, 0.1, 0.1, 0.1;
  // End before start is not allowed: (1,1) = 0.06 beats (0,0) = 0.07? no: (0,0) wins.
  auto d = best_span(ys, ye, 10);
  CHECK(d.span == TokenSpan{0, 0});
  CHECK(d.prob == doctest::Approx(0.07));
  ye << 0.05, 0.05, 0.1, 0.8;
  CHECK(best_span(ys, ye, 10).span == TokenSpan{1, 3});
  CHECK(best_span(ys, ye, 2).span == TokenSpan{2, 3});
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(3, 1.0 / 3);
  CHECK(best_span(flat, flat, 5).span == TokenSpan{0, 0});
  CHECK_THROWS_AS(best_span(ys, flat, 2), DimensionError);
}

TEST_CASE("stop rules") {
  const auto tr = trace_of({0.2, 0.7, 0.3, 1.0}, {{0, 0}, {0, 0}, {0, 0}, {0, 0}});
  CHECK(choose_stop_turn(tr, StopRule::Threshold, nullptr) == 2);
  // pi = 0.2, 0.56, 0.072, 0.168
  CHECK(choose_stop_turn(tr, StopRule::Marginal, nullptr) == 2);
  CHECK_THROWS_AS(choose_stop_turn(tr, StopRule::Sample, nullptr), ContractError);
  Rng rng(1);
  std::vector<std::size_t> hist(4, 0);
  for (int i = 0; i < 4000; ++i) ++hist[choose_stop_turn(tr, StopRule::Sample, &rng) - 1];
  CHECK(hist[1] > hist[0]);
  CHECK(hist[3] > hist[2]);
}

TEST_CASE("decision turn counts back while the argmax is unchanged") {
  auto tr = trace_of({0.1, 0.1, 0.1, 0.1, 1.0}, {{3, 5}, {2, 5}, {2, 6}, {2, 6}, {4, 6}});
  tr.stop_turn = 4;
  auto d = decision_turn(tr);
  CHECK(d.start == 2);
  CHECK(d.end == 3);
  tr.stop_turn = 1;
  d = decision_turn(tr);
  CHECK(d.start == 1);
  CHECK(d.end == 1);
  tr.stop_turn = 9;
  CHECK_THROWS_AS(decision_turn(tr), ContractError);
}

TEST_CASE("episodes run every turn and force the final stop") {
  Rng rng(2);
  auto s = testing::toy_setup(0, rng);
  auto p = ModelParams<double>::init(s.cfg, s.vocab.word_count(), s.vocab.char_count(), rng);
  Tape<double> tape;
  auto fw = forward(tape, p, s.cfg, s.question, s.passage, false);
  const auto& ep = fw.episode;
  CHECK(ep.ys.size() == 5);
  CHECK(ep.trace.state_updates == 5);
  CHECK(ep.tau.back().item() == 1.0);
  for (std::size_t t = 0; t + 1 < ep.tau.size(); ++t) CHECK(ep.tau[t].item() == doctest::Approx(0.5));
  // Marginal rule on a geometric distribution stops at turn 1.
  CHECK(ep.trace.stop_turn == 1);
}

TEST_CASE("fixed policy never stops before the last turn") {
  Rng rng(3);
  auto s = testing::toy_setup(3, rng);
  auto p = ModelParams<double>::init(s.cfg, s.vocab.word_count(), s.vocab.char_count(), rng);
  Tape<double> tape;
  auto fw = forward(tape, p, s.cfg, s.question, s.passage, false);
  REQUIRE(fw.episode.trace.turns.size() == 3);
  CHECK(fw.episode.trace.turns[0].pi == 0.0);
  CHECK(fw.episode.trace.turns[2].pi == 1.0);
  CHECK(fw.episode.trace.stop_turn == 3);
}

TEST_CASE("attention weights form a distribution peaked on the matching column") {
  Tape<double> tape;
  Tensor<double> mem(2, 3);
  mem << 1, 0, -1, 0, 1, 0;
  auto mp = tape.constant(mem);
  auto eye = tape.constant(Tensor<double>::Identity(2, 2));
  Tensor<double> sv(2, 1);
  sv << 0, 2;
  auto a = attention_weights(matmul(eye, mp), eye, tape.constant(sv), 10.0).value();
  CHECK(a.sum() == doctest::Approx(1.0));
  CHECK(a(1, 0) > 0.99);
}

TEST_CASE("gate cast and parameter visiting agree") {
  Rng rng(4);
  auto s = testing::toy_setup(0, rng);
  auto p = ModelParams<float>::init(s.cfg, s.vocab.word_count(), s.vocab.char_count(), rng);
  auto d = p.cast<double>();
  const auto a = p.list(s.cfg);
  const auto b = d.list(s.cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->name == b[i]->name);
    CHECK(a[i]->value.rows() == b[i]->value.rows());
  }
  // The gate's last layer starts at zero.
  CHECK(p.reasoner.gate.back().w.value.isZero());
  CHECK(p.reasoner.gate.back().b.value.isZero());
}
