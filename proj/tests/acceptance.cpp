// Acceptance suite: one PASS/FAIL line per criterion. Usage: acceptance [N ...]
#include "gradcheck.hpp"

#include "itr/config.hpp"
#include "itr/experiment.hpp"
#include "itr/metrics.hpp"
#include "itr/optim.hpp"
#include "itr/ranker.hpp"
#include "itr/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace itr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("itr_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small reader used by the training criteria.
RunConfig toy_run_config(const fs::path& dir, const SyntheticCorpus& corpus, std::size_t dim) {
  RunConfig cfg = default_config();
  save_dataset(corpus.train, dir / "train.json");
  save_dataset(corpus.dev, dir / "dev.json");
  write_vectors(dir / "vectors.txt", corpus.vector_words, dim, 11);
  cfg.train_data = (dir / "train.json").string();
  cfg.dev_data = (dir / "dev.json").string();
  cfg.vectors = (dir / "vectors.txt").string();
  cfg.out_dir = (dir / "out").string();
  auto& l = cfg.model.layers;
  l.word_dim = dim;
  l.char_dim = 8;
  l.char_filters = 16;
  l.trigram_filters = 16;
  l.hidden = dim;
  cfg.train.batch_size = 8;
  cfg.train.optimizer.lr = 1.0;
  cfg.write_traces = false;
  cfg.svg = false;
  cfg.finalize();
  return cfg;
}

// Full model gradient against central differences.
Outcome criterion_1() {
  double worst = 0.0;
  std::size_t checked = 0;
  std::string where;
  for (std::size_t turns : {std::size_t{0}, std::size_t{5}}) {
    Rng rng(3);
    auto s = testing::toy_setup(turns, rng);
    auto p = ModelParams<float>::init(s.cfg, s.vocab.word_count(), s.vocab.char_count(), rng).cast<double>();
    auto r = testing::grad_check(p, s);
    checked += r.checked;
    if (r.worst_rel >= worst) {
      worst = r.worst_rel;
      where = (turns == 0 ? "dynamic: " : "fixed-5: ") + r.worst_name;
    }
  }
  return {worst < 1e-3, std::to_string(checked) + " entries, worst relative error " + fmt("%.3g", worst) +
                            " at " + where};
}

// Shapes and normalization over random sizes.
Outcome criterion_2() {
  Rng rng(22);
  double worst = 0.0;
  std::size_t bad_shapes = 0;
  double worst_pi = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.below(8);
    const std::size_t n = 1 + rng.below(20);
    const std::size_t d = 1 + rng.below(8);
    ModelConfig cfg;
    auto& l = cfg.layers;
    l.word_dim = 2 + rng.below(6);
    l.char_dim = 3;
    l.char_filters = 2 + rng.below(4);
    l.trigram_filters = 2 + rng.below(4);
    l.hidden = d;
    l.dropout_embed = 0.0;
    l.dropout_gru = 0.0;
    l.alignment_norm = rng.bernoulli(0.5) ? AlignmentNorm::RowWise : AlignmentNorm::ColumnWise;
    cfg.reasoner.policy = TurnPolicy::dynamic(1 + rng.below(6));
    Vocab vocab;
    std::vector<std::string> words;
    for (int i = 0; i < 12; ++i) words.push_back("w" + std::to_string(i) + std::string(1 + rng.below(4), 'x'));
    for (const auto& w : words) vocab.add_word(w);
    auto text = [&](std::size_t len) {
      std::string t;
      for (std::size_t i = 0; i < len; ++i) t += (i ? " " : "") + words[rng.below(words.size())];
      return vocab.features(tokenize(t));
    };
    const auto q = text(m);
    const auto p = text(n);
    auto params = ModelParams<double>::init(cfg, vocab.word_count(), vocab.char_count(), rng);
    // Non-zero gate so tau varies by turn.
    for (auto& g : params.reasoner.gate) g.w.value.setRandom();
    Tape<double> tape;
    auto fw = forward(tape, params, cfg, q, p, false);
    const auto& e = fw.encoded;
    const Index M = static_cast<Index>(m), N = static_cast<Index>(n), D = static_cast<Index>(d);
    auto shape_is = [&](const Var<double>& v, Index r, Index c) {
      if (v.rows() != r || v.cols() != c) ++bad_shapes;
    };
    shape_is(e.c, M, N);
    shape_is(e.cq, M, N);
    shape_is(e.cp, N, 1);
    shape_is(e.u, 8 * D, N);
    shape_is(e.mp, 2 * D, N);
    shape_is(e.hq, 2 * D, M);
    const auto& cq = e.cq.value();
    if (l.alignment_norm == AlignmentNorm::RowWise) {
      worst = std::max(worst, (cq.rowwise().sum().array() - 1.0).abs().maxCoeff());
    } else {
      worst = std::max(worst, (cq.colwise().sum().array() - 1.0).abs().maxCoeff());
    }
    worst = std::max(worst, std::abs(e.cp.value().sum() - 1.0));
    std::vector<double> taus;
    for (std::size_t t = 0; t < fw.episode.ys.size(); ++t) {
      shape_is(fw.episode.ys[t], N, 1);
      worst = std::max(worst, std::abs(fw.episode.ys[t].value().sum() - 1.0));
      worst = std::max(worst, std::abs(fw.episode.ye[t].value().sum() - 1.0));
      taus.push_back(fw.episode.tau[t].item());
    }
    if (taus.back() != 1.0) ++bad_shapes;
    const auto pi = stop_distribution(taus);
    worst_pi = std::max(worst_pi, std::abs(std::accumulate(pi.begin(), pi.end(), 0.0) - 1.0));
    if (fw.episode.trace.state_updates != fw.episode.ys.size()) ++bad_shapes;
  }
  return {bad_shapes == 0 && worst < 1e-5 && worst_pi < 1e-12,
          "200 configurations, " + std::to_string(bad_shapes) + " shape violations, worst sum error " +
              fmt("%.2g", worst) + ", worst |sum pi - 1| " + fmt("%.2g", worst_pi)};
}

// Zero-initialized termination gate yields the geometric stop distribution.
Outcome criterion_3() {
  Rng rng(5);
  auto s = testing::toy_setup(0, rng);
  s.cfg.layers.dropout_embed = 0.0;
  s.cfg.reasoner.stop_rule = StopRule::Sample;
  auto params = ModelParams<float>::init(s.cfg, s.vocab.word_count(), s.vocab.char_count(), rng);
  const std::vector<double> expected = {0.5, 0.25, 0.125, 0.0625, 0.0625};
  std::vector<std::size_t> hist(5, 0);
  const std::size_t episodes = 1000;
  Rng stop_rng(99);
  double tau_err = 0.0;
  for (std::size_t i = 0; i < episodes; ++i) {
    Tape<float> tape;
    auto fw = forward(tape, params, s.cfg, s.question, s.passage, false, &stop_rng);
    for (std::size_t t = 0; t + 1 < fw.episode.tau.size(); ++t) {
      tau_err = std::max(tau_err, std::abs(static_cast<double>(fw.episode.tau[t].item()) - 0.5));
    }
    ++hist[fw.episode.trace.stop_turn - 1];
  }
  bool ok = tau_err < 1e-6;
  std::string counts;
  for (std::size_t t = 0; t < 5; ++t) {
    const double mean = episodes * expected[t];
    const double sd = std::sqrt(episodes * expected[t] * (1.0 - expected[t]));
    if (std::abs(static_cast<double>(hist[t]) - mean) > 3.0 * sd) ok = false;
    counts += (t ? "," : "") + std::to_string(hist[t]);
  }
  return {ok, "stop counts [" + counts + "] vs expected [500,250,125,62.5,62.5], max |tau - 0.5| " +
                  fmt("%.2g", tau_err)};
}

std::size_t brute_lcs(const Words& a, const Words& b) {
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    Words sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    std::size_t j = 0;
    for (std::size_t i = 0; i < b.size() && j < sub.size(); ++i) {
      if (b[i] == sub[j]) ++j;
    }
    if (j == sub.size()) best = std::max(best, sub.size());
  }
  return best;
}

Outcome criterion_4() {
  std::vector<std::string> fails;
  Rng rng(44);
  const Words alphabet = {"a1", "b2", "c3", "d4"};
  auto random_words = [&](std::size_t max_len) {
    Words w(rng.below(max_len + 1));
    for (auto& x : w) x = alphabet[rng.below(alphabet.size())];
    return w;
  };
  std::size_t lcs_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const Words a = random_words(7);
    const Words b = random_words(7);
    if (lcs_len(a, b) != brute_lcs(a, b)) ++lcs_bad;
  }
  if (lcs_bad) fails.push_back(std::to_string(lcs_bad) + " lcs mismatches");
  const Words pred = {"the", "cat"};
  const Words ref = {"the", "cat", "sat"};
  const double r = rouge_l(pred, ref);
  if (std::abs(r - 0.8) > 1e-12) fails.push_back("rouge " + fmt("%.6f", r));
  const std::vector<std::string> gold = {"material about live performance"};
  const double f1 = token_f1("live performance", gold);
  if (std::abs(f1 - 2.0 / 3.0) > 1e-12) fails.push_back("f1 " + fmt("%.6f", f1));
  const std::vector<Words> preds = {{"w1", "w2", "w3", "w4"}};
  const std::vector<Words> refs = {{"w1", "w2", "w3", "w4", "w5"}};
  const double b = bleu(preds, refs);
  if (std::abs(b - 0.7788) > 1e-4) fails.push_back("bleu " + fmt("%.6f", b));

  std::size_t span_bad = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<std::vector<Token>> passages;
    const std::size_t count = 1 + rng.below(3);
    for (std::size_t k = 0; k < count; ++k) {
      std::string text;
      const std::size_t len = 1 + rng.below(10);
      for (std::size_t j = 0; j < len; ++j) text += (j ? " " : "") + alphabet[rng.below(alphabet.size())];
      passages.push_back(tokenize(text));
    }
    std::string answer;
    const std::size_t alen = 1 + rng.below(4);
    for (std::size_t j = 0; j < alen; ++j) answer += (j ? " " : "") + alphabet[rng.below(alphabet.size())];
    const std::size_t max_len = 1 + rng.below(6);
    const SpanLabel got = max_rouge_span(passages, answer, max_len);
    // Exhaustive: earliest passage, earliest start, shortest span on ties.
    const Words answer_words = label_tokens(tokenize(answer));
    double best = 0.0;
    std::optional<std::size_t> best_p;
    TokenSpan best_span;
    for (std::size_t k = 0; k < passages.size(); ++k) {
      const Words w = label_tokens(passages[k]);
      for (std::size_t s = 0; s < w.size(); ++s) {
        for (std::size_t e = s; e < w.size() && e < s + max_len; ++e) {
          const Words sub(w.begin() + static_cast<std::ptrdiff_t>(s), w.begin() + static_cast<std::ptrdiff_t>(e + 1));
          const double score = rouge_l(sub, answer_words);
          if (score > best + 1e-12) {
            best = score;
            best_p = k;
            best_span = {s, e};
          }
        }
      }
    }
    if (std::abs(got.score - best) > 1e-12 || got.passage != best_p || (best_p && !(got.span == best_span))) {
      ++span_bad;
    }
  }
  if (span_bad) fails.push_back(std::to_string(span_bad) + " max_rouge_span mismatches");
  std::string detail = "lcs 1000 trials, ROUGE-L " + fmt("%.4f", r) + ", F1 " + fmt("%.4f", f1) + ", BLEU " +
                       fmt("%.4f", b) + ", 100 span searches";
  for (const auto& f : fails) detail += "; " + f;
  return {fails.empty(), detail};
}

// Training EM over a dataset with the given model.
double dataset_em(ModelParams<float>& params, const RunConfig& cfg, const Vocab& vocab, const Dataset& data) {
  PredictOptions po;
  po.seed = cfg.seed;
  const auto preds = predict_dataset(params, cfg.model, vocab, data, po);
  return evaluate(eval_items(data, preds)).em;
}

Outcome criterion_5() {
  const auto dir = scratch_dir("overfit");
  const auto corpus = synth_overfit(50, 200, 20, 40, 5);
  RunConfig cfg = toy_run_config(dir, corpus, 32);
  cfg.mode = "dynamic";
  cfg.train.epochs = 300;
  cfg.train.patience = 0;
  cfg.train.target_dev_em = 0.95;
  cfg.model.layers.dropout_embed = 0.0;
  cfg.model.layers.dropout_gru = 0.0;
  cfg.finalize();
  const auto start = std::chrono::steady_clock::now();
  const Vocab vocab = build_vocab(corpus.train, nullptr, cfg.vectors);
  auto params = init_model(cfg.model, vocab, cfg.vectors, cfg.seed);
  const auto result = train(params, cfg.model, vocab, corpus.train, &corpus.train, cfg.train);
  const double em = dataset_em(params, cfg, vocab, corpus.train);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {em >= 0.95 && secs < 600.0, "training EM " + fmt("%.3f", em) + " after " +
                                          std::to_string(result.curve.size()) + " epochs, " + fmt("%.0f", secs) + " s"};
}

std::string per_seed(const GridRow& row) {
  std::string s;
  for (const auto& c : row.cells) s += (s.empty() ? "" : "/") + fmt("%.2f", c.report.em);
  return s;
}

const GridRow& row_named(const GridResult& g, const std::string& label) {
  for (const auto& r : g.rows) {
    if (r.label == label) return r;
  }
  throw std::runtime_error("grid row missing: " + label);
}

Outcome criterion_6() {
  const auto dir = scratch_dir("multihop");
  const auto corpus = synth_multihop(500, 100, 3, 6);
  RunConfig cfg = toy_run_config(dir, corpus, 32);
  cfg.grid = "modes";
  cfg.grid_modes = {"single", "fixed-5", "dynamic"};
  cfg.seeds = {1, 2, 3};
  cfg.train.epochs = 30;
  cfg.train.patience = 8;
  cfg.finalize();
  const auto start = std::chrono::steady_clock::now();
  const auto g = run_grid(cfg, corpus.train, corpus.dev, true);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto& single = row_named(g, "single");
  const auto& fixed = row_named(g, "fixed-5");
  const auto& dyn = row_named(g, "dynamic");
  std::size_t wins = 0;
  for (std::size_t i = 0; i < dyn.cells.size(); ++i) {
    if (dyn.cells[i].report.em > single.cells[i].report.em) ++wins;
  }
  const bool ok = dyn.em >= fixed.em && fixed.em >= single.em && wins >= 2 && secs < 1800.0;
  return {ok, "mean dev EM single " + fmt("%.3f", single.em) + " (" + per_seed(single) + "), fixed-5 " +
                  fmt("%.3f", fixed.em) + " (" + per_seed(fixed) + "), dynamic " + fmt("%.3f", dyn.em) + " (" +
                  per_seed(dyn) + "); dynamic > single in " + std::to_string(wins) + "/3 seeds; chance 0.333; " +
                  fmt("%.0f", secs) + " s"};
}

Outcome criterion_7() {
  const auto dir = scratch_dir("oov");
  const auto corpus = synth_oov(500, 100, 7);
  RunConfig cfg = toy_run_config(dir, corpus, 32);
  cfg.grid = "channels";
  cfg.mode = "single";
  cfg.seeds = {1, 2, 3};
  cfg.train.epochs = 20;
  cfg.train.patience = 6;
  cfg.finalize();
  const auto g = run_grid(cfg, corpus.train, corpus.dev, true);
  bool populated = g.rows.size() == 3;
  for (const auto& r : g.rows) populated = populated && r.cells.size() == 3;
  const auto& word = row_named(g, "word");
  const auto& full = row_named(g, "word+char+3gram");
  std::size_t wins = 0;
  for (std::size_t i = 0; i < word.cells.size(); ++i) {
    if (full.cells[i].report.em >= word.cells[i].report.em) ++wins;
  }
  return {populated && wins >= 2, "dev EM word " + per_seed(word) + ", word+char " +
                                      per_seed(row_named(g, "word+char")) + ", word+char+3gram " + per_seed(full) +
                                      "; full >= word in " + std::to_string(wins) + "/3 seeds"};
}

Outcome criterion_8() {
  const auto dir = scratch_dir("ranker");
  const auto corpus = synth_ranker(1000, 100, 5, 8);
  RunConfig cfg = toy_run_config(dir, corpus, 32);
  cfg.grid = "selection";
  cfg.mode = "single";
  cfg.seeds = {1, 2, 3};
  cfg.train.epochs = 4;
  cfg.train.patience = 0;
  cfg.ranker.epochs = 5;
  cfg.ranker.filters = 32;
  cfg.ranker.trigram_dim = 16;
  cfg.finalize();
  const auto g = run_grid(cfg, corpus.train, corpus.dev, true);
  const double worst_top1 = *std::min_element(g.ranker_top1.begin(), g.ranker_top1.end());
  const auto& ranked = row_named(g, "ranked");
  const auto& oracle = row_named(g, "oracle");
  std::string rouge;
  for (std::size_t i = 0; i < ranked.cells.size(); ++i) {
    rouge += (i ? ", " : "") + fmt("%.3f", ranked.cells[i].report.rouge_l) + " <= " +
             fmt("%.3f", oracle.cells[i].report.rouge_l);
  }
  return {worst_top1 >= 0.9 && g.oracle_dominates.value_or(false),
          "ranker top-1 min " + fmt("%.2f", worst_top1) + " over 3 runs; ROUGE-L combine vs oracle " + rouge};
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

Outcome criterion_9() {
  const auto dir = scratch_dir("determinism");
  const auto corpus = synth_multihop(60, 20, 2, 9);
  RunConfig cfg = toy_run_config(dir, corpus, 16);
  cfg.train.epochs = 2;
  cfg.seeds = {4};
  cfg.grid_modes = {"single", "dynamic"};
  cfg.write_traces = true;
  cfg.svg = true;
  cfg.model.layers.dropout_embed = 0.1;
  cfg.finalize();
  std::vector<std::map<std::string, std::string>> runs;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path out = dir / ("run" + std::to_string(rep));
    RunConfig c = cfg;
    c.out_dir = (out / "train").string();
    command_train(c);
    c.model_dir = c.out_dir;
    c.out_dir = (out / "eval").string();
    command_eval(c);
    c.out_dir = (out / "grid").string();
    command_grid(c);
    c.out_dir = (out / "turns").string();
    command_analyze_turns(out / "eval" / "traces.jsonl", c.out_dir, true);
    auto tree = read_tree(out);
    // The resolved config records the output directory itself.
    for (auto it = tree.begin(); it != tree.end();) {
      it = it->first.ends_with("config.txt") ? tree.erase(it) : std::next(it);
    }
    runs.push_back(std::move(tree));
  }
  std::size_t differing = 0;
  for (const auto& [name, bytes] : runs[0]) {
    auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != bytes) ++differing;
  }
  const bool same_set = runs[0].size() == runs[1].size();
  return {same_set && differing == 0 && !runs[0].empty(),
          std::to_string(runs[0].size()) + " output files compared (checkpoints, tables, traces), " +
              std::to_string(differing) + " differ"};
}

Outcome criterion_10() {
  Parameter<double> p("x", Tensor<double>::Zero(1, 1));
  p.grad(0, 0) = 1.0;
  AdaDeltaSlot<double> slot;
  AdaDeltaConfig cfg;
  cfg.lr = 0.5;
  cfg.rho = 0.95;
  cfg.eps = 1e-6;
  adadelta_step(p, slot, cfg);
  const double delta = p.value(0, 0);
  return {std::abs(delta - (-2.236e-3)) < 1e-6, "first update " + fmt("%.6e", delta)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion_1, criterion_2, criterion_3, criterion_4,
                                                          criterion_5, criterion_6, criterion_7, criterion_8,
                                                          criterion_9, criterion_10};
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const long k = std::strtol(argv[i], nullptr, 10);
    if (k < 1 || k > static_cast<long>(criteria.size())) {
      std::cerr << "unknown criterion '" << argv[i] << "'\n";
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(k));
  }
  if (selected.empty()) {
    for (std::size_t k = 1; k <= criteria.size(); ++k) selected.push_back(k);
  }
  int failed = 0;
  for (std::size_t k : selected) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu: %s - %s [%.1f s]\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
