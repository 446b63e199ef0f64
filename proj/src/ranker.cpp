#include "itr/ranker.hpp"

#include "itr/checkpoint.hpp"
#include "itr/errors.hpp"
#include "itr/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace itr {

void RankerConfig::validate() const {
  if (trigram_dim == 0 || filters == 0 || window == 0 || out_dim == 0) {
    throw ConfigError("ranker dimensions must be positive");
  }
  if (!(gamma > 0.0)) throw ConfigError("ranker gamma must be positive");
  if (batch_size == 0) throw ConfigError("ranker batch_size must be at least 1");
  optimizer.validate();
}

template <typename Scalar>
RankerParams<Scalar> RankerParams<Scalar>::init(const RankerConfig& cfg, Rng& rng) {
  cfg.validate();
  RankerParams p;
  Tensor<Scalar> table(static_cast<Index>(kTrigramBuckets), static_cast<Index>(cfg.trigram_dim));
  for (Index i = 0; i < table.size(); ++i) table(i) = static_cast<Scalar>(rng.normal(0.0, 0.1));
  p.trigram_table = Parameter<Scalar>("ranker.trigram", std::move(table));
  p.conv_w = Parameter<Scalar>("ranker.conv.w", glorot<Scalar>(static_cast<Index>(cfg.filters),
                                                               static_cast<Index>(cfg.trigram_dim * cfg.window), rng));
  p.conv_b = Parameter<Scalar>("ranker.conv.b", Tensor<Scalar>::Zero(static_cast<Index>(cfg.filters), 1));
  p.proj_w = Parameter<Scalar>("ranker.proj.w",
                               glorot<Scalar>(static_cast<Index>(cfg.out_dim), static_cast<Index>(cfg.filters), rng));
  p.proj_b = Parameter<Scalar>("ranker.proj.b", Tensor<Scalar>::Zero(static_cast<Index>(cfg.out_dim), 1));
  return p;
}

template <typename Scalar>
RankerParams<Scalar> RankerParams<Scalar>::zeros(const RankerConfig& cfg) {
  cfg.validate();
  const auto k = static_cast<Index>(cfg.trigram_dim);
  const auto f = static_cast<Index>(cfg.filters);
  const auto o = static_cast<Index>(cfg.out_dim);
  RankerParams p;
  p.trigram_table = Parameter<Scalar>("ranker.trigram", Tensor<Scalar>::Zero(kTrigramBuckets, k));
  p.conv_w = Parameter<Scalar>("ranker.conv.w", Tensor<Scalar>::Zero(f, k * static_cast<Index>(cfg.window)));
  p.conv_b = Parameter<Scalar>("ranker.conv.b", Tensor<Scalar>::Zero(f, 1));
  p.proj_w = Parameter<Scalar>("ranker.proj.w", Tensor<Scalar>::Zero(o, f));
  p.proj_b = Parameter<Scalar>("ranker.proj.b", Tensor<Scalar>::Zero(o, 1));
  return p;
}

std::vector<std::vector<std::size_t>> word_trigrams(const std::vector<Token>& tokens) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(trigram_ids(t.text));
  return out;
}

template <typename Scalar>
Var<Scalar> ranker_tower(Tape<Scalar>& tape, RankerParams<Scalar>& p, const RankerConfig& cfg,
                         const std::vector<std::vector<std::size_t>>& words) {
  if (words.empty()) throw DimensionError("ranker_tower: empty text");
  std::vector<std::size_t> flat;
  for (const auto& w : words) flat.insert(flat.end(), w.begin(), w.end());
  if (flat.empty()) throw DimensionError("ranker_tower: text without trigrams");
  // Summing trigram rows per word is a product with a 0/1 pooling matrix.
  Tensor<Scalar> pool = Tensor<Scalar>::Zero(static_cast<Index>(flat.size()), static_cast<Index>(words.size()));
  Index row = 0;
  for (std::size_t j = 0; j < words.size(); ++j) {
    for (std::size_t k = 0; k < words[j].size(); ++k) pool(row++, static_cast<Index>(j)) = Scalar(1);
  }
  auto rows = transpose(gather(tape.parameter(p.trigram_table), std::span<const std::size_t>(flat)));
  auto x = matmul(rows, tape.constant(std::move(pool)));
  const Index lengths[] = {static_cast<Index>(words.size())};
  auto patches = unfold(x, static_cast<Index>(cfg.window), std::span<const Index>(lengths));
  auto h = tanh(add_colwise(matmul(tape.parameter(p.conv_w), patches), tape.parameter(p.conv_b)));
  auto pooled = max_over_axis(h, 1);
  return tanh(add(matmul(tape.parameter(p.proj_w), pooled), tape.parameter(p.proj_b)));
}

template <typename Scalar>
Var<Scalar> ranker_score_var(Tape<Scalar>& tape, RankerParams<Scalar>& p, const RankerConfig& cfg,
                             const std::vector<Token>& passage, const std::vector<Token>& question) {
  auto vp = ranker_tower(tape, p, cfg, word_trigrams(passage));
  auto vq = ranker_tower(tape, p, cfg, word_trigrams(question));
  return cosine_cols(vp, vq);
}

double ranker_score(RankerParams<float>& p, const RankerConfig& cfg, const std::vector<Token>& passage,
                    const std::vector<Token>& question) {
  Tape<float> tape;
  return static_cast<double>(ranker_score_var(tape, p, cfg, passage, question).item());
}

std::vector<bool> relevant_passages(const Example& ex) {
  std::vector<bool> rel(ex.passages.size(), false);
  for (std::size_t j = 0; j < ex.passages.size(); ++j) {
    rel[j] = ex.passages[j].selected || (ex.gold_passage == j);
  }
  return rel;
}

template <typename Scalar>
Var<Scalar> ranker_query_loss(Tape<Scalar>& tape, RankerParams<Scalar>& p, const RankerConfig& cfg,
                              const Example& ex, const std::vector<bool>& relevant) {
  if (relevant.size() != ex.passages.size()) throw DimensionError("ranker_query_loss: relevance flags mismatch");
  auto vq = ranker_tower(tape, p, cfg, word_trigrams(ex.question));
  std::vector<Var<Scalar>> scores;
  for (const Passage& ps : ex.passages) scores.push_back(cosine_cols(ranker_tower(tape, p, cfg, word_trigrams(ps.tokens)), vq));
  auto logp = log(softmax(scale(concat_rows(scores), static_cast<Scalar>(cfg.gamma)), 0), Scalar(1e-30));
  Var<Scalar> total;
  std::size_t count = 0;
  for (std::size_t j = 0; j < relevant.size(); ++j) {
    if (!relevant[j]) continue;
    auto term = entry(logp, static_cast<Index>(j), 0);
    total = count == 0 ? term : add(total, term);
    ++count;
  }
  if (count == 0) throw ConfigError("ranker_query_loss: query '" + ex.id + "' has no relevant passage");
  return scale(total, static_cast<Scalar>(-1.0 / static_cast<double>(count)));
}

namespace {

bool degenerate(const std::vector<bool>& rel) {
  const auto n = std::count(rel.begin(), rel.end(), true);
  return n == 0 || n == static_cast<std::ptrdiff_t>(rel.size());
}

}  // namespace

RankerTrainResult train_ranker(RankerParams<float>& p, const RankerConfig& cfg, const Dataset& data) {
  cfg.validate();
  RankerTrainResult result;
  std::vector<std::size_t> usable;
  std::vector<std::vector<bool>> relevance(data.examples.size());
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const Example& ex = data.examples[i];
    relevance[i] = relevant_passages(ex);
    if (ex.question.empty() || degenerate(relevance[i])) {
      ++result.skipped_queries;
      continue;
    }
    usable.push_back(i);
  }
  result.used_queries = usable.size();
  if (usable.empty()) throw ConfigError("ranker training set has no query with both relevant and irrelevant passages");
  auto plist = p.list();
  for (auto* q : plist) q->zero_grad();
  AdaDelta<float> opt(cfg.optimizer);
  Rng shuffle_rng(Rng::mix(cfg.seed, 0x7a4c));
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(usable);
    double sum = 0.0;
    for (std::size_t b = 0; b < usable.size(); b += cfg.batch_size) {
      const std::size_t end = std::min(usable.size(), b + cfg.batch_size);
      for (std::size_t k = b; k < end; ++k) {
        const std::size_t i = usable[k];
        Tape<float> tape;
        auto loss = ranker_query_loss(tape, p, cfg, data.examples[i], relevance[i]);
        if (!std::isfinite(loss.item())) {
          throw NumericError("non-finite ranker loss on query '" + data.examples[i].id + "'");
        }
        sum += loss.item();
        tape.backward(loss);
      }
      scale_gradients(plist, 1.0 / static_cast<double>(end - b));
      clip_gradients(plist, 5.0);
      opt.step(plist);
    }
    result.epoch_loss.push_back(sum / static_cast<double>(usable.size()));
  }
  return result;
}

double ranker_top1(RankerParams<float>& p, const RankerConfig& cfg, const Dataset& data) {
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const Example& ex : data.examples) {
    const auto rel = relevant_passages(ex);
    if (std::find(rel.begin(), rel.end(), true) == rel.end() || ex.question.empty()) continue;
    std::size_t best = 0;
    double best_score = -2.0;
    for (std::size_t j = 0; j < ex.passages.size(); ++j) {
      if (ex.passages[j].tokens.empty()) continue;
      const double r = ranker_score(p, cfg, ex.passages[j].tokens, ex.question);
      if (r > best_score) {
        best_score = r;
        best = j;
      }
    }
    ++total;
    if (rel[best]) ++hits;
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

std::optional<std::size_t> combine(std::span<const Candidate> candidates, std::span<const double> scores) {
  if (candidates.empty()) throw DimensionError("combine: no candidates");
  if (scores.size() != candidates.size()) {
    throw DimensionError("combine: " + std::to_string(scores.size()) + " ranker scores for " +
                         std::to_string(candidates.size()) + " passages");
  }
  std::optional<std::size_t> best;
  double best_score = -1.0;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (candidates[j].empty) continue;
    const double s = candidates[j].prob * (scores[j] + 1.0) / 2.0;
    if (!best || s > best_score) {
      best = j;
      best_score = s;
    }
  }
  return best;
}

std::size_t oracle_select(std::span<const Candidate> candidates, std::optional<std::size_t> gold) {
  if (!gold) throw ConfigError("oracle selection needs a gold passage annotation");
  if (*gold >= candidates.size()) {
    throw LookupError("oracle selection: gold passage " + std::to_string(*gold) + " of " +
                      std::to_string(candidates.size()));
  }
  return *gold;
}

void save_ranker(const std::filesystem::path& path, RankerParams<float>& p) {
  save_parameters(path, kRankerMagic, p.list());
}

void load_ranker(const std::filesystem::path& path, RankerParams<float>& p) {
  load_parameters(path, kRankerMagic, p.list());
}

template struct RankerParams<float>;
template struct RankerParams<double>;
template Var<float> ranker_tower(Tape<float>&, RankerParams<float>&, const RankerConfig&,
                                 const std::vector<std::vector<std::size_t>>&);
template Var<double> ranker_tower(Tape<double>&, RankerParams<double>&, const RankerConfig&,
                                  const std::vector<std::vector<std::size_t>>&);
template Var<float> ranker_score_var(Tape<float>&, RankerParams<float>&, const RankerConfig&,
                                     const std::vector<Token>&, const std::vector<Token>&);
template Var<double> ranker_score_var(Tape<double>&, RankerParams<double>&, const RankerConfig&,
                                      const std::vector<Token>&, const std::vector<Token>&);
template Var<float> ranker_query_loss(Tape<float>&, RankerParams<float>&, const RankerConfig&, const Example&,
                                      const std::vector<bool>&);
template Var<double> ranker_query_loss(Tape<double>&, RankerParams<double>&, const RankerConfig&, const Example&,
                                       const std::vector<bool>&);

}  // namespace itr
