#include "itr/experiment.hpp"

#include "itr/checkpoint.hpp"
#include "itr/errors.hpp"
#include "itr/ranker.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace itr {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  return out;
}

Dataset load_required(const std::string& path, const char* key) {
  if (path.empty()) throw ConfigError(std::string("config key '") + key + "' is required for this command");
  return load_dataset(path);
}

std::vector<TurnTrace> chosen_traces(const std::vector<Prediction>& preds) {
  std::vector<TurnTrace> out;
  for (const auto& p : preds) {
    if (p.passage) {
      out.push_back(p.readings[*p.passage].trace);
    } else if (!p.readings.empty() && !p.readings.front().trace.turns.empty()) {
      out.push_back(p.readings.front().trace);
    }
  }
  return out;
}

void write_breakdowns(const EvalReport& report, const fs::path& dir) {
  for (BreakdownKey key : {BreakdownKey::AnswerLength, BreakdownKey::QuestionWord, BreakdownKey::QueryType}) {
    const auto rows = breakdown(report, key);
    if (key == BreakdownKey::QueryType && rows.empty()) continue;
    write_breakdown_tsv(rows, key, dir / ("breakdown_" + to_string(key) + ".tsv"));
  }
}

void write_eval_outputs(const RunConfig& cfg, const EvalReport& report, const std::vector<Prediction>& preds,
                        const fs::path& dir) {
  fs::create_directories(dir);
  write_report_json(report, dir / "report.json");
  write_aggregate_tsv(report, dir / "aggregate.tsv");
  write_breakdowns(report, dir);
  write_predictions(preds, dir / "predictions.json");
  const auto h = turn_histogram(chosen_traces(preds), cfg.model.reasoner.policy.turns);
  write_turn_csv(h, dir / "turn_distribution.csv");
  if (cfg.write_traces) write_traces(preds, dir / "traces.jsonl");
  if (cfg.svg) {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (std::size_t t = 0; t < h.stop.size(); ++t) {
      labels.push_back("t=" + std::to_string(t + 1));
      values.push_back(static_cast<double>(h.stop[t]));
    }
    write_bar_svg(dir / "turn_distribution.svg", "stop turn", labels, values);
  }
}

RunConfig cell_config(const RunConfig& base, std::uint64_t seed) {
  RunConfig c = base;
  c.seed = seed;
  c.finalize();
  return c;
}

PredictOptions predict_options(const RunConfig& cfg) {
  PredictOptions po;
  po.selection = cfg.selection;
  po.empty_floor = cfg.train.empty_floor;
  po.seed = cfg.seed;
  po.loss = cfg.train.loss;
  return po;
}

std::vector<std::vector<double>> ranker_scores(RankerParams<float>& ranker, const RankerConfig& rc,
                                               const Dataset& data) {
  std::vector<std::vector<double>> out;
  for (const Example& ex : data.examples) {
    std::vector<double> s;
    for (const Passage& p : ex.passages) {
      s.push_back(p.tokens.empty() || ex.question.empty() ? -1.0 : ranker_score(ranker, rc, p.tokens, ex.question));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void aggregate_row(GridRow& row) {
  const double n = static_cast<double>(row.cells.size());
  for (const auto& c : row.cells) {
    row.em += c.report.em / n;
    row.f1 += c.report.f1 / n;
    row.bleu += c.report.bleu / n;
    row.rouge_l += c.report.rouge_l / n;
  }
}

}  // namespace

Vocab build_vocab(const Dataset& train, const Dataset* dev, const std::string& vectors) {
  Vocab vocab;
  add_dataset_words(vocab, train);
  if (dev != nullptr && !vectors.empty() && fs::exists(vectors)) {
    const auto listed = vector_file_words(vectors);
    const std::set<std::string> known(listed.begin(), listed.end());
    auto maybe_add = [&](const Token& t) {
      if (known.count(t.text)) vocab.add_word(t.text);
    };
    for (const Example& ex : dev->examples) {
      for (const Token& t : ex.question) maybe_add(t);
      for (const Passage& p : ex.passages) {
        for (const Token& t : p.tokens) maybe_add(t);
      }
    }
  }
  return vocab;
}

ModelParams<float> init_model(const ModelConfig& cfg, const Vocab& vocab, const std::string& vectors,
                              std::uint64_t seed) {
  Rng rng(Rng::mix(seed, 0x1417));
  auto params = ModelParams<float>::init(cfg, vocab.word_count(), vocab.char_count(), rng);
  Rng vec_rng(Rng::mix(seed, 0x7ec5));
  params.encoder.embed.word_table.value = load_pretrained_vectors(vectors, vocab, cfg.layers.word_dim, vec_rng);
  params.encoder.embed.word_table.zero_grad();
  return params;
}

std::uint64_t architecture_hash(const ModelConfig& cfg) {
  const auto& l = cfg.layers;
  const auto& r = cfg.reasoner;
  std::ostringstream os;
  os << l.word_dim << '/' << l.char_dim << '/' << l.char_filters << '/' << l.char_window << '/' << l.trigram_filters
     << '/' << l.hidden << '/' << l.highway_layers << '/' << to_string(l.channels) << '/' << r.gate_hidden << '/'
     << r.gate_layers;
  return fnv64(os.str());
}

void save_model(const fs::path& dir, const RunConfig& cfg, ModelParams<float>& params, const Vocab& vocab) {
  fs::create_directories(dir);
  save_parameters(dir / "model.itr", kModelMagic, params.list(cfg.model));
  vocab.save(dir / "vocab.txt");
  write_resolved_config(cfg, dir / "config.txt");
  ojson meta;
  meta["format"] = "itr-model-v1";
  meta["vocab_hash"] = hex64(vocab.hash());
  meta["architecture_hash"] = hex64(architecture_hash(cfg.model));
  auto out = open_out(dir / "model.meta.json");
  out << meta.dump(1) << '\n';
}

ModelBundle load_model(const fs::path& dir, const RunConfig* expected) {
  std::ifstream meta_in(dir / "model.meta.json");
  if (!meta_in) throw ConfigError("no model at " + dir.string() + " (missing model.meta.json)");
  ojson meta;
  try {
    meta = ojson::parse(meta_in);
  } catch (const ojson::parse_error& e) {
    throw ParseError((dir / "model.meta.json").string() + ": " + e.what());
  }
  ModelBundle b{load_config(dir / "config.txt"), Vocab::load(dir / "vocab.txt"), {}};
  const std::string stored_vocab = meta.value("vocab_hash", "");
  const std::string actual_vocab = hex64(b.vocab.hash());
  if (stored_vocab != actual_vocab) {
    throw ConfigError("vocabulary mismatch for " + dir.string() + ": checkpoint " + stored_vocab + ", vocab file " +
                      actual_vocab);
  }
  const std::string stored_arch = meta.value("architecture_hash", "");
  if (hex64(architecture_hash(b.config.model)) != stored_arch) {
    throw ConfigError("config mismatch for " + dir.string() + ": checkpoint " + stored_arch + ", config.txt " +
                      hex64(architecture_hash(b.config.model)));
  }
  if (expected != nullptr) {
    const std::string want = hex64(architecture_hash(expected->model));
    if (want != stored_arch) {
      throw ConfigError("config mismatch: checkpoint architecture " + stored_arch + ", requested " + want);
    }
  }
  Rng rng(0);
  b.params = ModelParams<float>::init(b.config.model, b.vocab.word_count(), b.vocab.char_count(), rng);
  load_parameters(dir / "model.itr", kModelMagic, b.params.list(b.config.model));
  return b;
}

TurnHistogram turn_histogram(const std::vector<TurnTrace>& traces, std::size_t turns) {
  TurnHistogram h;
  h.stop.assign(turns, 0);
  h.start_decided.assign(turns, 0);
  h.end_decided.assign(turns, 0);
  for (const auto& tr : traces) {
    if (tr.stop_turn < 1 || tr.stop_turn > turns) throw DimensionError("turn_histogram: stop turn beyond cap");
    const auto d = decision_turn(tr);
    ++h.stop[tr.stop_turn - 1];
    ++h.start_decided[d.start - 1];
    ++h.end_decided[d.end - 1];
    ++h.examples;
  }
  return h;
}

void write_turn_csv(const TurnHistogram& h, const fs::path& path) {
  auto out = open_out(path);
  out << "turn,stop,start_decided,end_decided\n";
  for (std::size_t t = 0; t < h.stop.size(); ++t) {
    out << t + 1 << ',' << h.stop[t] << ',' << h.start_decided[t] << ',' << h.end_decided[t] << '\n';
  }
}

void write_traces(const std::vector<Prediction>& predictions, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& p : predictions) {
    const TurnTrace* tr = nullptr;
    std::size_t passage = 0;
    if (p.passage) {
      passage = *p.passage;
      tr = &p.readings[passage].trace;
    } else if (!p.readings.empty() && !p.readings.front().trace.turns.empty()) {
      tr = &p.readings.front().trace;
    }
    if (tr == nullptr) continue;
    for (std::size_t t = 0; t < tr->turns.size(); ++t) {
      const TurnRecord& r = tr->turns[t];
      ojson j;
      j["id"] = p.id;
      j["passage"] = passage;
      j["turn"] = t + 1;
      j["turns"] = tr->turns.size();
      j["stop_turn"] = tr->stop_turn;
      j["tau"] = r.tau;
      j["pi"] = r.pi;
      j["argmax_start"] = r.argmax_start;
      j["argmax_end"] = r.argmax_end;
      j["span"] = {r.span.span.start, r.span.span.end};
      j["span_prob"] = r.span.prob;
      out << j.dump() << '\n';
    }
  }
}

std::vector<TurnTrace> read_traces(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  std::vector<TurnTrace> out;
  std::string line;
  std::string current;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const std::string where = path.string() + ":" + std::to_string(line_no);
    for (const char* key : {"id", "turn", "stop_turn", "tau", "pi", "argmax_start", "argmax_end"}) {
      if (!j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
    }
    const std::string id = j["id"].get<std::string>();
    const auto turn = j["turn"].get<std::size_t>();
    if (turn == 1 || id != current) {
      out.emplace_back();
      current = id;
      out.back().stop_turn = j["stop_turn"].get<std::size_t>();
    }
    TurnTrace& tr = out.back();
    if (turn != tr.turns.size() + 1) throw ParseError(where + ": turns out of order for '" + id + "'");
    TurnRecord r;
    r.tau = j["tau"].get<double>();
    r.pi = j["pi"].get<double>();
    r.argmax_start = j["argmax_start"].get<std::size_t>();
    r.argmax_end = j["argmax_end"].get<std::size_t>();
    tr.turns.push_back(std::move(r));
    tr.state_updates = tr.turns.size();
  }
  for (const auto& tr : out) {
    if (tr.stop_turn < 1 || tr.stop_turn > tr.turns.size()) {
      throw ParseError(path.string() + ": stop turn outside a trace");
    }
  }
  return out;
}

void write_predictions(const std::vector<Prediction>& predictions, const fs::path& path) {
  ojson j = ojson::object();
  for (const auto& p : predictions) j[p.id] = p.text;
  auto out = open_out(path);
  out << j.dump(1) << '\n';
}

std::map<std::string, std::string> read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const ojson::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path.string() + ": expected an object of id -> answer");
  std::map<std::string, std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value().get<std::string>();
  return out;
}

void write_bar_svg(const fs::path& path, const std::string& title, const std::vector<std::string>& labels,
                   const std::vector<double>& values) {
  if (labels.size() != values.size()) throw DimensionError("write_bar_svg: labels and values differ in length");
  const int width = 80 + 70 * static_cast<int>(values.size());
  const int height = 260;
  const int base = 210;
  double top = 0.0;
  for (double v : values) top = std::max(top, v);
  if (top <= 0.0) top = 1.0;
  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  out << "<line x1=\"40\" y1=\"" << base << "\" x2=\"" << width - 20 << "\" y2=\"" << base
      << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int h = static_cast<int>(160.0 * values[i] / top);
    const int x = 50 + 70 * static_cast<int>(i);
    out << "<rect x=\"" << x << "\" y=\"" << base - h << "\" width=\"50\" height=\"" << h
        << "\" fill=\"#4a7ab5\"/>\n";
    out << "<text x=\"" << x << "\" y=\"" << base + 18 << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << labels[i] << "</text>\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", values[i]);
    out << "<text x=\"" << x << "\" y=\"" << base - h - 4 << "\" font-family=\"sans-serif\" font-size=\"11\">" << buf
        << "</text>\n";
  }
  out << "</svg>\n";
}

CellResult run_cell(const RunConfig& cfg, const Dataset& train_set, const Dataset& dev, const std::string& row,
                    const std::optional<fs::path>& dir) {
  CellResult cell;
  cell.row = row;
  cell.seed = cfg.seed;
  const Vocab vocab = build_vocab(train_set, &dev, cfg.vectors);
  auto params = init_model(cfg.model, vocab, cfg.vectors, cfg.seed);
  cell.training = train(params, cfg.model, vocab, train_set, &dev, cfg.train, std::nullopt, dir);
  cell.predictions = predict_dataset(params, cfg.model, vocab, dev, predict_options(cfg));
  cell.report = evaluate(eval_items(dev, cell.predictions), cfg.rouge_beta);
  cell.turns = turn_histogram(chosen_traces(cell.predictions), cfg.model.reasoner.policy.turns);
  if (dir) {
    fs::create_directories(*dir);
    write_resolved_config(cfg, *dir / "config.txt");
    write_loss_curve(cell.training.curve, *dir / "loss_curve.csv");
    write_eval_outputs(cfg, cell.report, cell.predictions, *dir);
  }
  return cell;
}

GridResult run_grid(const RunConfig& cfg, const Dataset& train_set, const Dataset& dev, bool write) {
  GridResult result;
  result.kind = cfg.grid;
  const fs::path out_dir = cfg.out_dir;
  auto cell_dir = [&](const std::string& label, std::uint64_t seed) -> std::optional<fs::path> {
    if (!write) return std::nullopt;
    return out_dir / "cells" / (label + "-seed" + std::to_string(seed));
  };

  if (cfg.grid == "modes" || cfg.grid == "channels") {
    const auto& labels = cfg.grid == "modes" ? cfg.grid_modes : cfg.grid_channels;
    for (const auto& label : labels) {
      GridRow row;
      row.label = label;
      for (std::uint64_t seed : cfg.seeds) {
        RunConfig c = cell_config(cfg, seed);
        if (cfg.grid == "modes") {
          c.mode = label;
        } else {
          c.model.layers.channels = parse_channels(label);
        }
        c.finalize();
        row.cells.push_back(run_cell(c, train_set, dev, label, cell_dir(label, seed)));
      }
      aggregate_row(row);
      result.rows.push_back(std::move(row));
    }
  } else if (cfg.grid == "selection") {
    GridRow ranked{"ranked", {}, 0, 0, 0, 0};
    GridRow oracle{"oracle", {}, 0, 0, 0, 0};
    bool dominates = true;
    for (std::uint64_t seed : cfg.seeds) {
      RunConfig c = cell_config(cfg, seed);
      const Vocab vocab = build_vocab(train_set, &dev, c.vectors);
      auto params = init_model(c.model, vocab, c.vectors, seed);
      const auto training = train(params, c.model, vocab, train_set, &dev, c.train);
      Rng rrng(Rng::mix(seed, 0x4a4b));
      auto ranker = RankerParams<float>::init(c.ranker, rrng);
      train_ranker(ranker, c.ranker, train_set);
      result.ranker_top1.push_back(ranker_top1(ranker, c.ranker, dev));
      const auto scores = ranker_scores(ranker, c.ranker, dev);
      for (Selection sel : {Selection::Combine, Selection::Oracle}) {
        CellResult cell;
        cell.row = sel == Selection::Oracle ? "oracle" : "ranked";
        cell.seed = seed;
        cell.training = training;
        auto po = predict_options(c);
        po.selection = sel;
        po.ranker_scores = sel == Selection::Combine ? &scores : nullptr;
        cell.predictions = predict_dataset(params, c.model, vocab, dev, po);
        cell.report = evaluate(eval_items(dev, cell.predictions), c.rouge_beta);
        cell.turns = turn_histogram(chosen_traces(cell.predictions), c.model.reasoner.policy.turns);
        if (auto d = cell_dir(cell.row, seed)) {
          write_resolved_config(c, *d / "config.txt");
          write_loss_curve(training.curve, *d / "loss_curve.csv");
          write_eval_outputs(c, cell.report, cell.predictions, *d);
        }
        (sel == Selection::Oracle ? oracle : ranked).cells.push_back(std::move(cell));
      }
      if (oracle.cells.back().report.rouge_l < ranked.cells.back().report.rouge_l) dominates = false;
    }
    aggregate_row(ranked);
    aggregate_row(oracle);
    result.rows.push_back(std::move(ranked));
    result.rows.push_back(std::move(oracle));
    result.oracle_dominates = dominates;
  } else {
    throw ConfigError("unknown grid '" + cfg.grid + "'");
  }

  if (write) {
    fs::create_directories(out_dir);
    write_resolved_config(cfg, out_dir / "config.txt");
    auto table = open_out(out_dir / "grid.tsv");
    table << "row\tEM\tF1\tBLEU\tROUGE-L\tseeds\n";
    for (const auto& r : result.rows) {
      table << r.label << '\t' << fixed4(r.em) << '\t' << fixed4(r.f1) << '\t' << fixed4(r.bleu) << '\t'
            << fixed4(r.rouge_l) << '\t' << r.cells.size() << '\n';
    }
    auto per_seed = open_out(out_dir / "grid_per_seed.tsv");
    per_seed << "row\tseed\tEM\tF1\tBLEU\tROUGE-L\tbest_epoch\n";
    for (const auto& r : result.rows) {
      for (const auto& c : r.cells) {
        per_seed << r.label << '\t' << c.seed << '\t' << fixed4(c.report.em) << '\t' << fixed4(c.report.f1) << '\t'
                 << fixed4(c.report.bleu) << '\t' << fixed4(c.report.rouge_l) << '\t' << c.training.best_epoch
                 << '\n';
      }
    }
    auto turns = open_out(out_dir / "turn_distribution.csv");
    turns << "row,turn,stop,start_decided,end_decided\n";
    for (const auto& r : result.rows) {
      TurnHistogram sum;
      for (const auto& c : r.cells) {
        if (sum.stop.empty()) {
          sum = c.turns;
          continue;
        }
        for (std::size_t t = 0; t < sum.stop.size(); ++t) {
          sum.stop[t] += c.turns.stop[t];
          sum.start_decided[t] += c.turns.start_decided[t];
          sum.end_decided[t] += c.turns.end_decided[t];
        }
      }
      for (std::size_t t = 0; t < sum.stop.size(); ++t) {
        turns << r.label << ',' << t + 1 << ',' << sum.stop[t] << ',' << sum.start_decided[t] << ','
              << sum.end_decided[t] << '\n';
      }
    }
    if (result.oracle_dominates) {
      auto check = open_out(out_dir / "selection_check.tsv");
      check << "seed\tranker_top1\tranked_ROUGE-L\toracle_ROUGE-L\n";
      for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
        check << cfg.seeds[i] << '\t' << fixed4(result.ranker_top1[i]) << '\t'
              << fixed4(result.rows[0].cells[i].report.rouge_l) << '\t'
              << fixed4(result.rows[1].cells[i].report.rouge_l) << '\n';
      }
      check << "oracle_ge_ranked\t" << (*result.oracle_dominates ? "yes" : "no") << "\n";
    }
    if (cfg.svg) {
      std::vector<std::string> labels;
      std::vector<double> values;
      for (const auto& r : result.rows) {
        labels.push_back(r.label);
        values.push_back(r.em);
      }
      write_bar_svg(out_dir / "grid_em.svg", "dev EM by " + cfg.grid, labels, values);
    }
  }
  return result;
}

void command_train(const RunConfig& cfg) {
  const Dataset train_set = load_required(cfg.train_data, "train_data");
  std::optional<Dataset> dev;
  if (!cfg.dev_data.empty()) dev = load_dataset(cfg.dev_data);
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  write_resolved_config(cfg, out / "config.txt");
  const Vocab vocab = build_vocab(train_set, dev ? &*dev : nullptr, cfg.vectors);
  auto params = init_model(cfg.model, vocab, cfg.vectors, cfg.seed);
  const auto result = train(params, cfg.model, vocab, train_set, dev ? &*dev : nullptr, cfg.train, std::nullopt, out);
  write_loss_curve(result.curve, out / "loss_curve.csv");
  save_model(out, cfg, params, vocab);
  if (dev) {
    const auto preds = predict_dataset(params, cfg.model, vocab, *dev, predict_options(cfg));
    write_eval_outputs(cfg, evaluate(eval_items(*dev, preds), cfg.rouge_beta), preds, out / "dev");
  }
  std::cout << "trained " << result.curve.size() << " epochs";
  if (result.best_epoch > 0) std::cout << ", best dev F1 " << fixed4(result.best_dev_f1) << " at epoch " << result.best_epoch;
  std::cout << "; model written to " << out.string() << "\n";
}

void command_eval(const RunConfig& cfg) {
  if (cfg.model_dir.empty()) throw ConfigError("config key 'model_dir' is required for eval");
  const Dataset dev = load_required(cfg.dev_data, "dev_data");
  ModelBundle b = load_model(cfg.model_dir);
  RunConfig run = b.config;
  run.selection = cfg.selection;
  run.seed = cfg.seed;
  run.model.reasoner.stop_rule = cfg.model.reasoner.stop_rule;
  run.write_traces = cfg.write_traces;
  run.svg = cfg.svg;
  run.out_dir = cfg.out_dir;
  std::optional<std::vector<std::vector<double>>> scores;
  if (!cfg.ranker_path.empty()) {
    auto ranker = RankerParams<float>::zeros(cfg.ranker);
    load_ranker(cfg.ranker_path, ranker);
    scores = ranker_scores(ranker, cfg.ranker, dev);
  }
  auto po = predict_options(run);
  if (scores) po.ranker_scores = &*scores;
  const auto preds = predict_dataset(b.params, run.model, b.vocab, dev, po);
  const auto report = evaluate(eval_items(dev, preds), cfg.rouge_beta);
  write_resolved_config(run, fs::path(cfg.out_dir) / "config.txt");
  write_eval_outputs(run, report, preds, cfg.out_dir);
  std::cout << "EM " << fixed4(report.em) << " F1 " << fixed4(report.f1) << " BLEU " << fixed4(report.bleu)
            << " ROUGE-L " << fixed4(report.rouge_l) << "\n";
}

void command_predict(const RunConfig& cfg, const fs::path& data, const fs::path& out) {
  if (cfg.model_dir.empty()) throw ConfigError("config key 'model_dir' is required for predict");
  ModelBundle b = load_model(cfg.model_dir);
  const Dataset ds = load_dataset(data);
  RunConfig run = b.config;
  run.selection = cfg.selection;
  run.seed = cfg.seed;
  run.model.reasoner.stop_rule = cfg.model.reasoner.stop_rule;
  const auto preds = predict_dataset(b.params, run.model, b.vocab, ds, predict_options(run));
  write_predictions(preds, out);
  if (cfg.write_traces) {
    fs::path traces = out;
    traces.replace_extension(".traces.jsonl");
    write_traces(preds, traces);
  }
}

void command_rank_train(const RunConfig& cfg) {
  const Dataset train_set = load_required(cfg.train_data, "train_data");
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  write_resolved_config(cfg, out / "config.txt");
  Rng rng(Rng::mix(cfg.seed, 0x4a4b));
  auto ranker = RankerParams<float>::init(cfg.ranker, rng);
  const auto result = train_ranker(ranker, cfg.ranker, train_set);
  save_ranker(out / "ranker.irk", ranker);
  auto log = open_out(out / "ranker_train.tsv");
  log << "epoch\tloss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", result.epoch_loss[e]);
    log << e + 1 << '\t' << buf << '\n';
  }
  log << "used_queries\t" << result.used_queries << "\nskipped_queries\t" << result.skipped_queries << '\n';
  if (!cfg.dev_data.empty()) {
    const Dataset dev = load_dataset(cfg.dev_data);
    const double top1 = ranker_top1(ranker, cfg.ranker, dev);
    log << "dev_top1\t" << fixed4(top1) << '\n';
    std::cout << "dev top-1 " << fixed4(top1) << "\n";
  }
  std::cout << "ranker trained on " << result.used_queries << " queries (" << result.skipped_queries
            << " skipped); written to " << (out / "ranker.irk").string() << "\n";
}

void command_grid(const RunConfig& cfg) {
  const Dataset train_set = load_required(cfg.train_data, "train_data");
  const Dataset dev = load_required(cfg.dev_data, "dev_data");
  const auto result = run_grid(cfg, train_set, dev, true);
  std::cout << "row\tEM\tF1\tBLEU\tROUGE-L\n";
  for (const auto& r : result.rows) {
    std::cout << r.label << '\t' << fixed4(r.em) << '\t' << fixed4(r.f1) << '\t' << fixed4(r.bleu) << '\t'
              << fixed4(r.rouge_l) << '\n';
  }
}

void command_analyze_turns(const fs::path& traces, const fs::path& out_dir, bool svg) {
  const auto all = read_traces(traces);
  std::size_t turns = 0;
  for (const auto& t : all) turns = std::max(turns, t.turns.size());
  const auto h = turn_histogram(all, turns);
  fs::create_directories(out_dir);
  write_turn_csv(h, out_dir / "turn_distribution.csv");
  if (svg) {
    std::vector<std::string> labels;
    std::vector<double> stop;
    std::vector<double> start;
    std::vector<double> end;
    for (std::size_t t = 0; t < turns; ++t) {
      labels.push_back("t=" + std::to_string(t + 1));
      stop.push_back(static_cast<double>(h.stop[t]));
      start.push_back(static_cast<double>(h.start_decided[t]));
      end.push_back(static_cast<double>(h.end_decided[t]));
    }
    write_bar_svg(out_dir / "stop_turns.svg", "stop turn", labels, stop);
    write_bar_svg(out_dir / "start_decided.svg", "start decided at turn", labels, start);
    write_bar_svg(out_dir / "end_decided.svg", "end decided at turn", labels, end);
  }
  std::cout << h.examples << " traces analyzed\n";
}

}  // namespace itr
