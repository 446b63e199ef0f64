#pragma once

#include "itr/dataset.hpp"
#include "itr/metrics.hpp"
#include "itr/model.hpp"
#include "itr/trainer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// Inference: one reader pass per passage, then answer selection.
namespace itr {

enum class Selection { Combine, Oracle };

Selection parse_selection(const std::string& name);
std::string to_string(Selection s);

struct PassageReading {
  DecodedSpan span;  // best span at the stop turn
  bool empty = false;
  TurnTrace trace;
  std::optional<double> loss;  // when a gold span was given
};

template <typename Scalar>
PassageReading read_passage(ModelParams<Scalar>& params, const ModelConfig& cfg, const TokenFeatures& question,
                            const TokenFeatures& passage, double empty_floor, Rng* stop_rng = nullptr,
                            const TokenSpan* gold = nullptr, const LossConfig* loss = nullptr);

struct Prediction {
  std::string id;
  std::string text;
  std::optional<std::size_t> passage;
  TokenSpan span;
  double prob = 0.0;
  std::vector<PassageReading> readings;
};

struct PredictOptions {
  Selection selection = Selection::Combine;
  double empty_floor = 1e-4;
  // Per-example ranker scores in [-1, 1]; uniform when absent.
  const std::vector<std::vector<double>>* ranker_scores = nullptr;
  std::uint64_t seed = 0;  // stop-turn sampling
  bool with_loss = false;
  LossConfig loss;
};

Prediction predict_example(ModelParams<float>& params, const ModelConfig& cfg, const Vocab& vocab, const Example& ex,
                           const PredictOptions& opt, std::size_t index = 0);

std::vector<Prediction> predict_dataset(ModelParams<float>& params, const ModelConfig& cfg, const Vocab& vocab,
                                        const Dataset& data, const PredictOptions& opt);

// Pairs predictions with the raw answers for scoring; examples without
// answers are left out.
std::vector<EvalItem> eval_items(const Dataset& data, const std::vector<Prediction>& predictions);

}  // namespace itr
