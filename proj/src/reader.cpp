#include "itr/reader.hpp"

#include "itr/errors.hpp"
#include "itr/ranker.hpp"

namespace itr {

Selection parse_selection(const std::string& name) {
  if (name == "combine" || name == "ranked") return Selection::Combine;
  if (name == "oracle") return Selection::Oracle;
  throw ConfigError("unknown selection '" + name + "' (combine | oracle)");
}

std::string to_string(Selection s) { return s == Selection::Oracle ? "oracle" : "combine"; }

template <typename Scalar>
PassageReading read_passage(ModelParams<Scalar>& params, const ModelConfig& cfg, const TokenFeatures& question,
                            const TokenFeatures& passage, double empty_floor, Rng* stop_rng, const TokenSpan* gold,
                            const LossConfig* loss) {
  Tape<Scalar> tape;
  auto fw = forward(tape, params, cfg, question, passage, false, stop_rng);
  PassageReading out;
  out.trace = std::move(fw.episode.trace);
  out.span = out.trace.stop().span;
  out.empty = out.span.prob < empty_floor;
  if (gold != nullptr) {
    const LossConfig lc = loss ? *loss : LossConfig{};
    auto parts = instance_loss(tape, fw.episode, *gold, lc, cfg.reasoner.policy.is_fixed());
    out.loss = static_cast<double>(parts.total.item());
  }
  return out;
}

template PassageReading read_passage(ModelParams<float>&, const ModelConfig&, const TokenFeatures&,
                                     const TokenFeatures&, double, Rng*, const TokenSpan*, const LossConfig*);
template PassageReading read_passage(ModelParams<double>&, const ModelConfig&, const TokenFeatures&,
                                     const TokenFeatures&, double, Rng*, const TokenSpan*, const LossConfig*);

Prediction predict_example(ModelParams<float>& params, const ModelConfig& cfg, const Vocab& vocab, const Example& ex,
                           const PredictOptions& opt, std::size_t index) {
  Prediction pred;
  pred.id = ex.id;
  if (ex.passages.empty() || ex.question.empty()) return pred;
  const TokenFeatures q = vocab.features(ex.question);
  Rng stop_rng(Rng::mix(opt.seed, index));
  std::vector<Candidate> candidates;
  for (std::size_t j = 0; j < ex.passages.size(); ++j) {
    const Passage& p = ex.passages[j];
    if (p.tokens.empty()) {
      PassageReading empty;
      empty.empty = true;
      pred.readings.push_back(std::move(empty));
      candidates.push_back({0.0, true});
      continue;
    }
    const TokenSpan* gold = nullptr;
    if (opt.with_loss && ex.gold_passage == j && p.gold) gold = &*p.gold;
    pred.readings.push_back(read_passage(params, cfg, q, vocab.features(p.tokens), opt.empty_floor, &stop_rng, gold,
                                         &opt.loss));
    candidates.push_back({pred.readings.back().span.prob, pred.readings.back().empty});
  }

  std::optional<std::size_t> chosen;
  if (opt.selection == Selection::Oracle) {
    chosen = oracle_select(candidates, ex.gold_passage);
  } else {
    std::vector<double> scores(candidates.size(), 1.0);
    if (opt.ranker_scores != nullptr) {
      if (index >= opt.ranker_scores->size() || (*opt.ranker_scores)[index].size() != candidates.size()) {
        throw DimensionError("predict: ranker scores do not match passages of example " + ex.id);
      }
      scores = (*opt.ranker_scores)[index];
    }
    chosen = combine(candidates, scores);
  }
  if (chosen) {
    const PassageReading& r = pred.readings[*chosen];
    pred.passage = chosen;
    pred.span = r.span.span;
    pred.prob = r.span.prob;
    if (!ex.passages[*chosen].tokens.empty()) {
      pred.text = span_text(ex.passages[*chosen].text, ex.passages[*chosen].tokens, r.span.span);
    }
  }
  return pred;
}

std::vector<Prediction> predict_dataset(ModelParams<float>& params, const ModelConfig& cfg, const Vocab& vocab,
                                        const Dataset& data, const PredictOptions& opt) {
  std::vector<Prediction> out;
  out.reserve(data.examples.size());
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    out.push_back(predict_example(params, cfg, vocab, data.examples[i], opt, i));
  }
  return out;
}

std::vector<EvalItem> eval_items(const Dataset& data, const std::vector<Prediction>& predictions) {
  if (data.examples.size() != predictions.size()) {
    throw DimensionError("eval_items: " + std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(data.examples.size()) + " examples");
  }
  std::vector<EvalItem> items;
  items.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Example& ex = data.examples[i];
    if (ex.raw_answers.empty()) continue;
    EvalItem item;
    item.id = ex.id;
    item.prediction = predictions[i].text;
    item.golds = ex.raw_answers;
    item.question = ex.question_text;
    item.query_type = ex.query_type;
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace itr
