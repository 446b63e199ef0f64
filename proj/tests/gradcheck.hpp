#pragma once

#include "itr/model.hpp"
#include "itr/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

// Finite-difference check of the full reader loss.
namespace itr::testing {

struct GradCheckResult {
  std::size_t checked = 0;
  double worst_rel = 0.0;
  std::string worst_name;
};

struct GradCheckSetup {
  ModelConfig cfg;
  Vocab vocab;
  TokenFeatures question;
  TokenFeatures passage;
  TokenSpan gold;
};

inline GradCheckSetup toy_setup(std::size_t turns, Rng& rng) {
  GradCheckSetup s;
  auto& l = s.cfg.layers;
  l.word_dim = 5;
  l.char_dim = 3;
  l.char_filters = 3;
  l.char_window = 5;
  l.trigram_filters = 3;
  l.hidden = 4;
  l.highway_layers = 2;
  l.dropout_embed = 0.0;
  l.dropout_gru = 0.0;
  l.train_word_embeddings = true;
  s.cfg.reasoner.policy = turns == 0 ? TurnPolicy::dynamic(5) : TurnPolicy::fixed(turns);
  s.cfg.reasoner.gate_hidden = 4;
  const char* words[] = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "iota",
                         "kappa", "lam",  "mu",    "nu",    "xi",  "omi",  "pi",  "rho",   "sig"};
  for (const char* w : words) s.vocab.add_word(w);
  auto pick = [&](std::size_t n) {
    std::string text;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) text += ' ';
      text += words[rng.below(std::size(words))];
    }
    return s.vocab.features(tokenize(text));
  };
  s.question = pick(3);
  s.passage = pick(6);
  s.gold = {2, 4};
  return s;
}

// Loss with the detached statistics frozen at `stats` (computed when null).
inline double toy_loss(ModelParams<double>& p, const GradCheckSetup& s, DetachedStats* stats, bool backward) {
  Tape<double> tape;
  auto fw = forward(tape, p, s.cfg, s.question, s.passage, false);
  const bool fixed = s.cfg.reasoner.policy.is_fixed();
  LossConfig lc;
  lc.answer_grad_into_gate = true;
  auto loss = instance_loss(tape, fw.episode, s.gold, lc, fixed, stats->pi.empty() ? nullptr : stats);
  if (stats->pi.empty()) *stats = loss.stats;
  if (backward) tape.backward(loss.total);
  return loss.total.item();
}

// Central differences on every entry of every parameter; large tables are
// checked on the rows the instance touches plus a few random ones.
inline GradCheckResult grad_check(ModelParams<double>& p, const GradCheckSetup& s, double h = 1e-5) {
  DetachedStats stats;
  for (auto* q : p.list(s.cfg)) q->zero_grad();
  toy_loss(p, s, &stats, true);
  GradCheckResult r;
  for (auto* q : p.list(s.cfg)) {
    if (!q->trainable) continue;
    const Tensor<double> analytic = q->grad;
    const Index rows = q->value.rows();
    std::vector<Index> row_ids;
    if (rows > 64) {
      for (Index i = 0; i < rows; ++i) {
        if (analytic.row(i).cwiseAbs().maxCoeff() > 0) row_ids.push_back(i);
      }
      for (Index k = 0; k < 4; ++k) row_ids.push_back((k * 7919) % rows);
    } else {
      for (Index i = 0; i < rows; ++i) row_ids.push_back(i);
    }
    for (Index i : row_ids) {
      for (Index j = 0; j < q->value.cols(); ++j) {
        const double keep = q->value(i, j);
        q->value(i, j) = keep + h;
        const double up = toy_loss(p, s, &stats, false);
        q->value(i, j) = keep - h;
        const double down = toy_loss(p, s, &stats, false);
        q->value(i, j) = keep;
        const double numeric = (up - down) / (2 * h);
        const double a = analytic(i, j);
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
        ++r.checked;
        if (rel > r.worst_rel) {
          r.worst_rel = rel;
          r.worst_name = q->name + "[" + std::to_string(i) + "," + std::to_string(j) + "] analytic " +
                         std::to_string(a) + " numeric " + std::to_string(numeric);
        }
      }
    }
  }
  return r;
}

}  // namespace itr::testing
