#pragma once

#include "itr/dataset.hpp"
#include "itr/model.hpp"
#include "itr/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace itr {

// Advantage of turn t against the expected reward b = sum pi_t r_t.
// Multiplicative: r_t / b - 1. Additive: r_t - b.
enum class Advantage { Multiplicative, Additive };

Advantage parse_advantage(const std::string& name);
std::string to_string(Advantage a);

struct LossConfig {
  Advantage advantage = Advantage::Multiplicative;
  // Let the answer log-likelihood term also train the termination gate
  // through pi (otherwise pi is detached there).
  bool answer_grad_into_gate = false;
  double log_floor = 1e-12;
};

// Detached per-turn quantities. Normally read off the episode; passing them
// explicitly freezes them, e.g. for finite-difference checks.
struct DetachedStats {
  std::vector<double> pi;
  std::vector<double> reward;
};

template <typename Scalar>
struct InstanceLoss {
  Var<Scalar> total;
  Var<Scalar> answer;
  Var<Scalar> termination;  // invalid for fixed policies
  DetachedStats stats;
  std::vector<double> advantage;
};

// r_t = ys_t[s*] ye_t[e*]
// L_ans  = -sum_t pi_t (log ys_t[s*] + log ye_t[e*])   (pi detached)
// L_term = -sum_t pi_t A_t                              (A detached)
// Fixed policies have no gate, so L_term is dropped.
template <typename Scalar>
InstanceLoss<Scalar> instance_loss(Tape<Scalar>& tape, const Episode<Scalar>& ep, TokenSpan gold,
                                   const LossConfig& cfg, bool fixed_policy,
                                   const DetachedStats* frozen = nullptr);

// Per-turn advantages from detached pi and rewards.
std::vector<double> advantages(const DetachedStats& stats, Advantage kind);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  double clip_norm = 5.0;
  std::size_t patience = 5;  // epochs without dev F1 gain; 0 disables
  double target_dev_em = 0.0;  // stop once dev EM reaches this; 0 disables
  double empty_floor = 1e-4;
  AdaDeltaConfig optimizer;
  LossConfig loss;
  bool verbose = false;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_loss;
  std::optional<double> dev_em;
  std::optional<double> dev_f1;
};

struct TrainResult {
  std::vector<EpochStats> curve;
  std::size_t best_epoch = 0;
  double best_dev_f1 = -1.0;
  bool stopped_early = false;
  std::size_t skipped_updates = 0;
};

// Minibatch AdaDelta over the span-labeled examples of `train` (gold passage
// only). With a dev set, the parameters of the best dev-F1 epoch are restored
// at the end and, when `checkpoint` is given, saved there on every
// improvement. Throws NumericError on a non-finite loss after writing
// `nan_dump.json` into `dump_dir` when given.
TrainResult train(ModelParams<float>& params, const ModelConfig& cfg, const Vocab& vocab, const Dataset& train_set,
                  const Dataset* dev_set, const TrainConfig& tc,
                  const std::optional<std::filesystem::path>& checkpoint = std::nullopt,
                  const std::optional<std::filesystem::path>& dump_dir = std::nullopt);

// epoch,split,loss,EM,F1
void write_loss_curve(const std::vector<EpochStats>& curve, const std::filesystem::path& path);

// Vocabulary over the words of every question and passage in `data`.
void add_dataset_words(Vocab& vocab, const Dataset& data);

}  // namespace itr
