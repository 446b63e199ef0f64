// Command-line front end: ingestion, training, evaluation and the experiment grid.
#include "itr/config.hpp"
#include "itr/dataset.hpp"
#include "itr/errors.hpp"
#include "itr/experiment.hpp"
#include "itr/synthetic.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string out;
  std::vector<std::string> overrides;
};

itr::RunConfig resolve(const GlobalOptions& g) {
  itr::RunConfig cfg = g.config.empty() ? itr::default_config() : itr::load_config(g.config);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw itr::ConfigError("--set expects key=value, got '" + kv + "'");
    itr::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) cfg.seed = *g.seed;
  if (!g.mode.empty()) cfg.mode = g.mode;
  if (!g.out.empty()) cfg.out_dir = g.out;
  cfg.finalize();
  return cfg;
}

// Ingestion outputs are files; the resolved config goes next to them.
void write_dataset(const itr::RunConfig& cfg, const itr::Dataset& data, const fs::path& out) {
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  itr::save_dataset(data, out);
  fs::path conf = out;
  conf.replace_extension(".config.txt");
  itr::write_resolved_config(cfg, conf);
  std::cout << data.examples.size() << " examples written to " << out.string();
  if (data.skipped_answers > 0) std::cout << "; " << data.skipped_answers << " answers skipped";
  if (data.skipped_examples > 0) std::cout << "; " << data.skipped_examples << " examples skipped";
  if (data.label_upper_bound) std::cout << "; label ROUGE-L upper bound " << *data.label_upper_bound;
  std::cout << "\n";
}

fs::path require_out(const GlobalOptions& g, const char* what) {
  if (g.out.empty()) throw itr::ConfigError(std::string("--out <") + what + "> is required");
  return g.out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative reasoning reader for extractive question answering"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "key = value config file");
  app.add_option("--seed", g.seed, "random seed (overrides the config)");
  app.add_option("--mode", g.mode, "single | fixed-K | dynamic");
  app.add_option("--out", g.out, "output directory or file");
  app.add_option("--set", g.overrides, "override a config key (key=value)");

  std::string input;
  std::size_t max_span_len = 50;

  auto* squad = app.add_subcommand("ingest-squad", "SQuAD v1.1 JSON to the dataset format");
  squad->add_option("input", input, "SQuAD JSON file")->required();

  auto* marco = app.add_subcommand("ingest-marco", "MARCO-style JSON lines to the dataset format");
  marco->add_option("input", input, "JSON lines file")->required();
  marco->add_option("--max-span-len", max_span_len, "longest derived span");

  auto* derive = app.add_subcommand("derive-spans", "recompute max-ROUGE-L span labels of a dataset");
  derive->add_option("input", input, "dataset file")->required();
  derive->add_option("--max-span-len", max_span_len, "longest derived span");

  auto* train = app.add_subcommand("train", "train a reader on train_data, select on dev_data");
  auto* eval = app.add_subcommand("eval", "evaluate model_dir on dev_data");
  auto* predict = app.add_subcommand("predict", "write id -> answer predictions");
  predict->add_option("input", input, "dataset file")->required();
  auto* rank = app.add_subcommand("rank-train", "train the passage ranker on train_data");
  auto* grid = app.add_subcommand("grid", "run the configured experiment grid");
  auto* turns = app.add_subcommand("analyze-turns", "turn histograms from a trace dump");
  turns->add_option("input", input, "traces JSONL file")->required();

  std::string kind;
  std::size_t n_train = 500;
  std::size_t n_dev = 100;
  std::size_t vector_dim = 0;
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus (train.json, dev.json, vectors.txt)");
  synth->add_option("kind", kind, "overfit | multihop | oov | ranker")->required();
  synth->add_option("--train", n_train, "training examples");
  synth->add_option("--dev", n_dev, "dev examples");
  synth->add_option("--vector-dim", vector_dim, "vector dimension (default: word_dim)");

  CLI11_PARSE(app, argc, argv);

  try {
    const itr::RunConfig cfg = resolve(g);
    if (*squad) {
      write_dataset(cfg, itr::ingest_squad(input), require_out(g, "file"));
    } else if (*marco) {
      write_dataset(cfg, itr::ingest_marco(input, max_span_len), require_out(g, "file"));
    } else if (*derive) {
      itr::Dataset data = itr::load_dataset(input);
      itr::derive_spans(data, max_span_len);
      write_dataset(cfg, data, require_out(g, "file"));
    } else if (*train) {
      itr::command_train(cfg);
    } else if (*eval) {
      itr::command_eval(cfg);
    } else if (*predict) {
      const fs::path out = require_out(g, "file");
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      itr::command_predict(cfg, input, out);
      fs::path conf = out;
      conf.replace_extension(".config.txt");
      itr::write_resolved_config(cfg, conf);
    } else if (*rank) {
      itr::command_rank_train(cfg);
    } else if (*grid) {
      itr::command_grid(cfg);
    } else if (*turns) {
      itr::command_analyze_turns(input, cfg.out_dir, cfg.svg);
      itr::write_resolved_config(cfg, fs::path(cfg.out_dir) / "config.txt");
    } else if (*synth) {
      const fs::path out = cfg.out_dir;
      fs::create_directories(out);
      const auto corpus = itr::synth_by_name(kind, n_train, n_dev, cfg.seed);
      itr::save_dataset(corpus.train, out / "train.json");
      itr::save_dataset(corpus.dev, out / "dev.json");
      const std::size_t dim = vector_dim > 0 ? vector_dim : cfg.model.layers.word_dim;
      itr::write_vectors(out / "vectors.txt", corpus.vector_words, dim, cfg.seed);
      auto written = cfg;
      written.train_data = (out / "train.json").string();
      written.dev_data = (out / "dev.json").string();
      written.vectors = (out / "vectors.txt").string();
      written.out_dir.clear();
      itr::write_resolved_config(written, out / "config.txt");
      std::cout << corpus.train.examples.size() << " train / " << corpus.dev.examples.size() << " dev examples in "
                << out.string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
