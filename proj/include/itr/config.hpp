#pragma once

#include "itr/model.hpp"
#include "itr/ranker.hpp"
#include "itr/reader.hpp"
#include "itr/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace itr {

// Everything a command needs, read from UTF-8 "key = value" lines with '#'
// comments. Unknown keys are rejected.
struct RunConfig {
  std::string train_data;
  std::string dev_data;
  std::string vectors;
  std::string out_dir = "out";
  std::string model_dir;       // trained model for eval / predict
  std::string ranker_path;     // ranker checkpoint; empty means uniform scores
  std::string mode = "dynamic";
  std::size_t t_max = 5;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string grid = "modes";  // modes | channels | selection
  std::vector<std::string> grid_modes = {"single", "fixed-5", "dynamic"};
  std::vector<std::string> grid_channels = {"word", "word+char", "word+char+3gram"};
  Selection selection = Selection::Combine;
  double rouge_beta = 1.0;
  bool write_traces = true;
  bool svg = true;

  ModelConfig model;
  TrainConfig train;
  RankerConfig ranker;

  // Resolves mode/t_max into the model's turn policy and checks ranges.
  void finalize();
};

RunConfig default_config();

// Applies one key/value pair; throws ConfigError naming the key.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Every key with its resolved value, one "key = value" per line, sorted.
std::string config_to_text(const RunConfig& cfg);
void write_resolved_config(const RunConfig& cfg, const std::filesystem::path& path);

std::vector<std::string> config_keys();

}  // namespace itr
