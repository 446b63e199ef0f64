#include "itr/config.hpp"

#include "itr/errors.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace itr {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) {
    throw ConfigError("config key '" + key + "': expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>) {
      out += items[i];
    } else {
      out += std::to_string(items[i]);
    }
  }
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define STR_FIELD(name, member) \
  {name, {[](RunConfig& c, const std::string&, const std::string& v) { c.member = v; }, \
          [](const RunConfig& c) { return c.member; }}}
#define SIZE_FIELD(name, member) \
  {name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = static_cast<std::size_t>(to_u64(k, v)); }, \
          [](const RunConfig& c) { return std::to_string(c.member); }}}
#define U64_FIELD(name, member) \
  {name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_u64(k, v); }, \
          [](const RunConfig& c) { return std::to_string(c.member); }}}
#define DOUBLE_FIELD(name, member) \
  {name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); }, \
          [](const RunConfig& c) { return fmt(c.member); }}}
#define BOOL_FIELD(name, member) \
  {name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_bool(k, v); }, \
          [](const RunConfig& c) { return fmt(c.member); }}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      STR_FIELD("train_data", train_data),
      STR_FIELD("dev_data", dev_data),
      STR_FIELD("vectors", vectors),
      STR_FIELD("out_dir", out_dir),
      STR_FIELD("model_dir", model_dir),
      STR_FIELD("ranker_path", ranker_path),
      {"mode",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          parse_mode(v, c.t_max);
          c.mode = v;
        },
        [](const RunConfig& c) { return c.mode; }}},
      SIZE_FIELD("t_max", t_max),
      U64_FIELD("seed", seed),
      {"seeds",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.seeds.clear();
          for (const auto& s : split_list(v)) c.seeds.push_back(to_u64(k, s));
          if (c.seeds.empty()) throw ConfigError("config key 'seeds': empty list");
        },
        [](const RunConfig& c) { return join(c.seeds); }}},
      {"grid",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          if (v != "modes" && v != "channels" && v != "selection") {
            throw ConfigError("config key 'grid': expected modes | channels | selection, got '" + v + "'");
          }
          c.grid = v;
        },
        [](const RunConfig& c) { return c.grid; }}},
      {"grid_modes",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          c.grid_modes = split_list(v);
          for (const auto& m : c.grid_modes) parse_mode(m, c.t_max);
          if (c.grid_modes.empty()) throw ConfigError("config key 'grid_modes': empty list");
        },
        [](const RunConfig& c) { return join(c.grid_modes); }}},
      {"grid_channels",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          c.grid_channels = split_list(v);
          for (const auto& m : c.grid_channels) parse_channels(m);
          if (c.grid_channels.empty()) throw ConfigError("config key 'grid_channels': empty list");
        },
        [](const RunConfig& c) { return join(c.grid_channels); }}},
      {"selection",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.selection = parse_selection(v); },
        [](const RunConfig& c) { return to_string(c.selection); }}},
      DOUBLE_FIELD("rouge_beta", rouge_beta),
      BOOL_FIELD("write_traces", write_traces),
      BOOL_FIELD("svg", svg),

      SIZE_FIELD("word_dim", model.layers.word_dim),
      SIZE_FIELD("char_dim", model.layers.char_dim),
      SIZE_FIELD("char_filters", model.layers.char_filters),
      SIZE_FIELD("char_window", model.layers.char_window),
      SIZE_FIELD("trigram_filters", model.layers.trigram_filters),
      SIZE_FIELD("hidden", model.layers.hidden),
      SIZE_FIELD("highway_layers", model.layers.highway_layers),
      DOUBLE_FIELD("dropout_embed", model.layers.dropout_embed),
      DOUBLE_FIELD("dropout_gru", model.layers.dropout_gru),
      {"channels",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.model.layers.channels = parse_channels(v); },
        [](const RunConfig& c) { return to_string(c.model.layers.channels); }}},
      {"alignment_norm",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          if (v == "row") {
            c.model.layers.alignment_norm = AlignmentNorm::RowWise;
          } else if (v == "column") {
            c.model.layers.alignment_norm = AlignmentNorm::ColumnWise;
          } else {
            throw ConfigError("config key 'alignment_norm': expected row | column, got '" + v + "'");
          }
        },
        [](const RunConfig& c) {
          return std::string(c.model.layers.alignment_norm == AlignmentNorm::RowWise ? "row" : "column");
        }}},
      BOOL_FIELD("train_word_embeddings", model.layers.train_word_embeddings),

      DOUBLE_FIELD("lambda", model.reasoner.lambda),
      SIZE_FIELD("gate_hidden", model.reasoner.gate_hidden),
      SIZE_FIELD("gate_layers", model.reasoner.gate_layers),
      SIZE_FIELD("max_span_len", model.reasoner.max_span_len),
      {"stop_rule",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.model.reasoner.stop_rule = parse_stop_rule(v); },
        [](const RunConfig& c) { return to_string(c.model.reasoner.stop_rule); }}},

      SIZE_FIELD("epochs", train.epochs),
      SIZE_FIELD("batch_size", train.batch_size),
      DOUBLE_FIELD("clip_norm", train.clip_norm),
      SIZE_FIELD("patience", train.patience),
      DOUBLE_FIELD("target_dev_em", train.target_dev_em),
      DOUBLE_FIELD("empty_floor", train.empty_floor),
      DOUBLE_FIELD("lr", train.optimizer.lr),
      DOUBLE_FIELD("rho", train.optimizer.rho),
      DOUBLE_FIELD("eps", train.optimizer.eps),
      {"advantage",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.train.loss.advantage = parse_advantage(v); },
        [](const RunConfig& c) { return to_string(c.train.loss.advantage); }}},
      BOOL_FIELD("answer_grad_into_gate", train.loss.answer_grad_into_gate),
      BOOL_FIELD("verbose", train.verbose),

      SIZE_FIELD("ranker_trigram_dim", ranker.trigram_dim),
      SIZE_FIELD("ranker_filters", ranker.filters),
      SIZE_FIELD("ranker_window", ranker.window),
      SIZE_FIELD("ranker_out_dim", ranker.out_dim),
      DOUBLE_FIELD("ranker_gamma", ranker.gamma),
      SIZE_FIELD("ranker_epochs", ranker.epochs),
      SIZE_FIELD("ranker_batch_size", ranker.batch_size),
      DOUBLE_FIELD("ranker_lr", ranker.optimizer.lr),
  };
  return table;
}

#undef STR_FIELD
#undef SIZE_FIELD
#undef U64_FIELD
#undef DOUBLE_FIELD
#undef BOOL_FIELD

}  // namespace

void RunConfig::finalize() {
  model.reasoner.policy = parse_mode(mode, t_max);
  train.seed = seed;
  ranker.seed = seed;
  ranker.optimizer.rho = train.optimizer.rho;
  ranker.optimizer.eps = train.optimizer.eps;
  model.validate();
  train.validate();
  ranker.validate();
  if (!(rouge_beta > 0.0)) throw ConfigError("rouge_beta must be positive");
}

RunConfig default_config() {
  RunConfig c;
  c.finalize();
  return c;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = fields();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(cfg, key, value);
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.finalize();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string config_to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(cfg) + "\n";
  return out;
}

void write_resolved_config(const RunConfig& cfg, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << config_to_text(cfg);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, field] : fields()) keys.push_back(key);
  return keys;
}

}  // namespace itr
