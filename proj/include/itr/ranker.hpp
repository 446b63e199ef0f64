#pragma once

#include "itr/dataset.hpp"
#include "itr/ops.hpp"
#include "itr/optim.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

// Letter-trigram convolutional passage ranker and the answer selection rules
// across passages.
namespace itr {

struct RankerConfig {
  std::size_t trigram_dim = 32;  // per-word trigram embedding width
  std::size_t filters = 256;
  std::size_t window = 5;
  std::size_t out_dim = 64;
  double gamma = 10.0;
  std::size_t epochs = 10;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  AdaDeltaConfig optimizer;

  void validate() const;
};

// A word's trigram-count vector times the first-layer weights is the sum of
// the weight rows of its trigrams, so the 50000-wide input is kept as a table.
template <typename Scalar>
struct RankerParams {
  Parameter<Scalar> trigram_table;  // kTrigramBuckets x trigram_dim
  Parameter<Scalar> conv_w;         // filters x (trigram_dim * window)
  Parameter<Scalar> conv_b;         // filters x 1
  Parameter<Scalar> proj_w;         // out_dim x filters
  Parameter<Scalar> proj_b;         // out_dim x 1

  static RankerParams init(const RankerConfig& cfg, Rng& rng);
  static RankerParams zeros(const RankerConfig& cfg);

  template <typename F>
  void visit(F&& f) {
    f(trigram_table);
    f(conv_w);
    f(conv_b);
    f(proj_w);
    f(proj_b);
  }
  std::vector<Parameter<Scalar>*> list() {
    return {&trigram_table, &conv_w, &conv_b, &proj_w, &proj_b};
  }
};

// Trigram ids of each word.
std::vector<std::vector<std::size_t>> word_trigrams(const std::vector<Token>& tokens);

// Text vector: trigram sums per word -> conv -> tanh -> max over positions
// -> tanh projection. out_dim x 1.
template <typename Scalar>
Var<Scalar> ranker_tower(Tape<Scalar>& tape, RankerParams<Scalar>& p, const RankerConfig& cfg,
                         const std::vector<std::vector<std::size_t>>& words);

// Cosine of the two tower outputs, 0 when either vector is zero.
template <typename Scalar>
Var<Scalar> ranker_score_var(Tape<Scalar>& tape, RankerParams<Scalar>& p, const RankerConfig& cfg,
                             const std::vector<Token>& passage, const std::vector<Token>& question);

double ranker_score(RankerParams<float>& p, const RankerConfig& cfg, const std::vector<Token>& passage,
                    const std::vector<Token>& question);

// Passages counted as relevant: selected, or holding the span label.
std::vector<bool> relevant_passages(const Example& ex);

// -log softmax(gamma * r)[relevant], averaged over the relevant passages.
template <typename Scalar>
Var<Scalar> ranker_query_loss(Tape<Scalar>& tape, RankerParams<Scalar>& p, const RankerConfig& cfg,
                              const Example& ex, const std::vector<bool>& relevant);

struct RankerTrainResult {
  std::size_t used_queries = 0;
  std::size_t skipped_queries = 0;  // all relevant or all irrelevant
  std::vector<double> epoch_loss;
};

RankerTrainResult train_ranker(RankerParams<float>& p, const RankerConfig& cfg, const Dataset& data);

// Fraction of queries (with at least one relevant passage) whose top-scored
// passage is relevant.
double ranker_top1(RankerParams<float>& p, const RankerConfig& cfg, const Dataset& data);

// Per-passage reader output for selection.
struct Candidate {
  double prob = 0.0;
  bool empty = false;
};

// argmax_j prob_j * (r_j + 1) / 2 over non-empty candidates; first maximum
// wins. nullopt when every candidate is empty.
std::optional<std::size_t> combine(std::span<const Candidate> candidates, std::span<const double> scores);

// The gold passage's candidate; throws ConfigError without an annotation.
std::size_t oracle_select(std::span<const Candidate> candidates, std::optional<std::size_t> gold);

void save_ranker(const std::filesystem::path& path, RankerParams<float>& p);
void load_ranker(const std::filesystem::path& path, RankerParams<float>& p);

}  // namespace itr
