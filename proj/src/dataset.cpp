#include "itr/dataset.hpp"

#include "itr/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <iostream>
#include <set>

namespace itr {
namespace {

using json = nlohmann::json;

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

std::string string_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) throw ParseError(where + "." + key + ": expected string");
  return v.get<std::string>();
}

const json& array_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_array()) throw ParseError(where + "." + key + ": expected array");
  return v;
}

}  // namespace

void finalize_example(Example& ex) {
  ex.question = tokenize(ex.question_text);
  for (Passage& p : ex.passages) {
    p.tokens = tokenize(p.text);
    if (p.gold && (p.gold->start > p.gold->end || p.gold->end >= p.tokens.size())) {
      throw ParseError("example " + ex.id + ": gold span (" + std::to_string(p.gold->start) + ", " +
                       std::to_string(p.gold->end) + ") outside passage of " + std::to_string(p.tokens.size()) +
                       " tokens");
    }
  }
  if (ex.gold_passage && *ex.gold_passage >= ex.passages.size()) {
    throw ParseError("example " + ex.id + ": gold passage index out of range");
  }
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  nlohmann::ordered_json root;
  root["format"] = "itr-dataset-v1";
  if (data.label_upper_bound) root["label_upper_bound"] = *data.label_upper_bound;
  auto arr = nlohmann::ordered_json::array();
  for (const Example& ex : data.examples) {
    nlohmann::ordered_json e;
    e["id"] = ex.id;
    e["question"] = ex.question_text;
    e["answers"] = ex.raw_answers;
    e["query_type"] = ex.query_type ? nlohmann::ordered_json(*ex.query_type) : nlohmann::ordered_json(nullptr);
    e["gold_passage"] = ex.gold_passage ? nlohmann::ordered_json(*ex.gold_passage) : nlohmann::ordered_json(nullptr);
    e["label_score"] = ex.label_score;
    auto ps = nlohmann::ordered_json::array();
    for (const Passage& p : ex.passages) {
      nlohmann::ordered_json pj;
      pj["text"] = p.text;
      pj["selected"] = p.selected;
      if (p.gold) {
        pj["gold"] = {p.gold->start, p.gold->end};
      } else {
        pj["gold"] = nullptr;
      }
      ps.push_back(std::move(pj));
    }
    e["passages"] = std::move(ps);
    arr.push_back(std::move(e));
  }
  root["examples"] = std::move(arr);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << root.dump(1) << '\n';
}

Dataset load_dataset(const std::filesystem::path& path) {
  const json root = read_json(path);
  const std::string where = path.string();
  if (!root.is_object() || root.value("format", "") != "itr-dataset-v1") {
    throw ParseError(where + ": not an itr dataset (missing format tag)");
  }
  Dataset data;
  if (root.contains("label_upper_bound")) data.label_upper_bound = root["label_upper_bound"].get<double>();
  const json& arr = array_field(root, "examples", where);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& e = arr[i];
    const std::string w = where + ":examples[" + std::to_string(i) + "]";
    Example ex;
    ex.id = string_field(e, "id", w);
    ex.question_text = string_field(e, "question", w);
    for (const auto& a : array_field(e, "answers", w)) ex.raw_answers.push_back(a.get<std::string>());
    if (e.contains("query_type") && e["query_type"].is_string()) ex.query_type = e["query_type"].get<std::string>();
    if (e.contains("gold_passage") && e["gold_passage"].is_number()) {
      ex.gold_passage = e["gold_passage"].get<std::size_t>();
    }
    ex.label_score = e.value("label_score", 1.0);
    for (const auto& pj : array_field(e, "passages", w)) {
      Passage p;
      p.text = string_field(pj, "text", w + ".passages");
      p.selected = pj.value("selected", false);
      if (pj.contains("gold") && pj["gold"].is_array()) {
        p.gold = TokenSpan{pj["gold"][0].get<std::size_t>(), pj["gold"][1].get<std::size_t>()};
      }
      ex.passages.push_back(std::move(p));
    }
    finalize_example(ex);
    data.examples.push_back(std::move(ex));
  }
  return data;
}

Dataset ingest_squad(const std::filesystem::path& path) {
  const json root = read_json(path);
  const std::string where = path.string();
  Dataset data;
  std::set<std::string> ids;
  const json& articles = array_field(root, "data", where);
  for (std::size_t a = 0; a < articles.size(); ++a) {
    const std::string wa = "data[" + std::to_string(a) + "]";
    const json& paragraphs = array_field(articles[a], "paragraphs", wa);
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      const std::string wp = wa + ".paragraphs[" + std::to_string(p) + "]";
      const std::string context = string_field(paragraphs[p], "context", wp);
      const auto ctx_tokens = tokenize(context);
      const json& qas = array_field(paragraphs[p], "qas", wp);
      for (std::size_t q = 0; q < qas.size(); ++q) {
        const std::string wq = wp + ".qas[" + std::to_string(q) + "]";
        Example ex;
        ex.id = string_field(qas[q], "id", wq);
        if (!ids.insert(ex.id).second) throw ParseError(wq + ": duplicate question id '" + ex.id + "'");
        ex.question_text = string_field(qas[q], "question", wq);
        Passage passage;
        passage.text = context;
        passage.tokens = ctx_tokens;
        passage.selected = true;
        const json& answers = array_field(qas[q], "answers", wq);
        for (std::size_t k = 0; k < answers.size(); ++k) {
          const std::string wk = wq + ".answers[" + std::to_string(k) + "]";
          const std::string text = string_field(answers[k], "text", wk);
          const json& start = field(answers[k], "answer_start", wk);
          if (!start.is_number_integer()) throw ParseError(wk + ".answer_start: expected integer");
          ex.raw_answers.push_back(text);
          if (passage.gold) continue;
          try {
            const auto al = align_answer_to_span(context, ctx_tokens, text, start.get<std::size_t>());
            if (al.relocated) {
              ++data.relocated_answers;
              std::cerr << "warning: " << ex.id << ": answer text not at offset, relocated\n";
            }
            passage.gold = al.span;
          } catch (const AlignmentError& e) {
            ++data.skipped_answers;
            std::cerr << "warning: " << ex.id << ": " << e.what() << " (skipped)\n";
          }
        }
        ex.passages.push_back(std::move(passage));
        if (ex.passages[0].gold) ex.gold_passage = 0;
        ex.question = tokenize(ex.question_text);
        data.examples.push_back(std::move(ex));
      }
    }
  }
  return data;
}

Dataset ingest_marco(const std::filesystem::path& path, std::size_t max_span_len) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path.string());
  Dataset data;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    Example ex;
    const json& qid = field(j, "query_id", where);
    ex.id = qid.is_string() ? qid.get<std::string>() : qid.dump();
    if (!ids.insert(ex.id).second) throw ParseError(where + ": duplicate query_id '" + ex.id + "'");
    ex.question_text = string_field(j, "query", where);
    ex.question = tokenize(ex.question_text);
    if (j.contains("query_type") && j["query_type"].is_string()) ex.query_type = j["query_type"].get<std::string>();
    for (const auto& pj : array_field(j, "passages", where)) {
      Passage p;
      p.text = string_field(pj, "passage_text", where + ".passages");
      p.tokens = tokenize(p.text);
      if (pj.contains("is_selected")) {
        const json& s = pj["is_selected"];
        p.selected = s.is_boolean() ? s.get<bool>() : (s.is_number() && s.get<int>() != 0);
      }
      if (p.tokens.empty()) continue;
      ex.passages.push_back(std::move(p));
    }
    if (ex.passages.empty()) {
      ++data.skipped_examples;
      continue;
    }
    if (j.contains("answers") && j["answers"].is_array()) {
      for (const auto& a : j["answers"]) {
        if (a.is_string()) ex.raw_answers.push_back(a.get<std::string>());
      }
    }
    data.examples.push_back(std::move(ex));
  }
  derive_spans(data, max_span_len);
  return data;
}

void derive_spans(Dataset& data, std::size_t max_span_len) {
  double label_sum = 0.0;
  std::size_t labeled = 0;
  for (Example& ex : data.examples) {
    for (auto& p : ex.passages) p.gold.reset();
    ex.gold_passage.reset();
    ex.label_score = 0.0;
    if (ex.raw_answers.empty()) continue;
    std::vector<std::vector<Token>> toks;
    for (const auto& p : ex.passages) toks.push_back(p.tokens);
    // Best label over all reference answers.
    SpanLabel best;
    for (const auto& ans : ex.raw_answers) {
      SpanLabel lab = max_rouge_span(toks, ans, max_span_len);
      if (lab.score > best.score) best = lab;
    }
    ex.label_score = best.score;
    label_sum += best.score;
    ++labeled;
    if (!best.empty()) {
      ex.gold_passage = best.passage;
      ex.passages[*best.passage].gold = best.span;
    }
  }
  data.label_upper_bound.reset();
  if (labeled > 0) data.label_upper_bound = label_sum / static_cast<double>(labeled);
}

}  // namespace itr
