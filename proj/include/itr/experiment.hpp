#pragma once

#include "itr/config.hpp"
#include "itr/dataset.hpp"
#include "itr/metrics.hpp"
#include "itr/reader.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

// Command implementations and the experiment grid.
namespace itr {

// Training words plus dev words that have a pretrained vector.
Vocab build_vocab(const Dataset& train, const Dataset* dev, const std::string& vectors);

ModelParams<float> init_model(const ModelConfig& cfg, const Vocab& vocab, const std::string& vectors,
                              std::uint64_t seed);

// Digest of the configuration keys that determine tensor shapes.
std::uint64_t architecture_hash(const ModelConfig& cfg);

struct ModelBundle {
  RunConfig config;
  Vocab vocab;
  ModelParams<float> params;
};

// dir/model.itr, dir/vocab.txt, dir/config.txt, dir/model.meta.json
void save_model(const std::filesystem::path& dir, const RunConfig& cfg, ModelParams<float>& params,
                const Vocab& vocab);
// With `expected`, its architecture must match the stored one.
ModelBundle load_model(const std::filesystem::path& dir, const RunConfig* expected = nullptr);

// Stop turns and decision turns, counted per turn.
struct TurnHistogram {
  std::vector<std::size_t> stop;
  std::vector<std::size_t> start_decided;
  std::vector<std::size_t> end_decided;
  std::size_t examples = 0;
};
TurnHistogram turn_histogram(const std::vector<TurnTrace>& traces, std::size_t turns);
void write_turn_csv(const TurnHistogram& h, const std::filesystem::path& path);

// One JSON object per (example, turn).
void write_traces(const std::vector<Prediction>& predictions, const std::filesystem::path& path);
std::vector<TurnTrace> read_traces(const std::filesystem::path& path);

void write_predictions(const std::vector<Prediction>& predictions, const std::filesystem::path& path);
std::map<std::string, std::string> read_predictions(const std::filesystem::path& path);

// Simple static bar chart.
void write_bar_svg(const std::filesystem::path& path, const std::string& title, const std::vector<std::string>& labels,
                   const std::vector<double>& values);

struct CellResult {
  std::string row;
  std::uint64_t seed = 0;
  EvalReport report;
  TrainResult training;
  std::vector<Prediction> predictions;
  TurnHistogram turns;
};

// Trains on `train`, evaluates on `dev`. Writes the cell's artifacts when
// `dir` is given.
CellResult run_cell(const RunConfig& cfg, const Dataset& train, const Dataset& dev, const std::string& row,
                    const std::optional<std::filesystem::path>& dir);

struct GridRow {
  std::string label;
  std::vector<CellResult> cells;  // one per seed
  double em = 0.0;
  double f1 = 0.0;
  double bleu = 0.0;
  double rouge_l = 0.0;
};

struct GridResult {
  std::string kind;
  std::vector<GridRow> rows;
  // Selection grid: oracle ROUGE-L >= combined ROUGE-L on every seed.
  std::optional<bool> oracle_dominates;
  std::vector<double> ranker_top1;
};

// Runs cfg.grid over cfg.seeds and writes grid.tsv, grid_per_seed.tsv and
// per-cell directories below cfg.out_dir when `write` is set.
GridResult run_grid(const RunConfig& cfg, const Dataset& train, const Dataset& dev, bool write = true);

// Command entry points used by the CLI.
void command_train(const RunConfig& cfg);
void command_eval(const RunConfig& cfg);
void command_predict(const RunConfig& cfg, const std::filesystem::path& data, const std::filesystem::path& out);
void command_rank_train(const RunConfig& cfg);
void command_grid(const RunConfig& cfg);
void command_analyze_turns(const std::filesystem::path& traces, const std::filesystem::path& out_dir, bool svg);

}  // namespace itr
