#pragma once

#include "itr/metrics.hpp"
#include "itr/text.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace itr {

struct Passage {
  std::string text;
  std::vector<Token> tokens;
  std::optional<TokenSpan> gold;
  // Relevance flag carried by multi-passage data; informational.
  bool selected = false;
};

// One question with its passages. A single-passage (SQuAD-style) example has
// exactly one passage.
struct Example {
  std::string id;
  std::string question_text;
  std::vector<Token> question;
  std::vector<Passage> passages;
  std::vector<std::string> raw_answers;
  std::optional<std::string> query_type;
  // Passage holding the training label, when one exists.
  std::optional<std::size_t> gold_passage;
  // ROUGE-L of the derived label against the free-form answer (1 for exact
  // span data).
  double label_score = 1.0;

  // Has a span label usable for training.
  bool answerable() const { return gold_passage.has_value() && passages[*gold_passage].gold.has_value(); }
};

struct Dataset {
  std::vector<Example> examples;
  // Ingestion counters.
  std::size_t skipped_answers = 0;
  std::size_t skipped_examples = 0;
  std::size_t relocated_answers = 0;
  // Mean best ROUGE-L of derived labels (free-form data only).
  std::optional<double> label_upper_bound;
};

// Re-tokenizes texts and checks every gold span against its passage.
void finalize_example(Example& ex);

// Canonical dataset file (JSON). Tokens are recomputed on load.
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// SQuAD v1.1 JSON: data[] -> paragraphs[] -> {context, qas[] -> {id, question,
// answers[] -> {text, answer_start}}}. The first alignable answer becomes the
// span label; every answer text is kept for evaluation.
Dataset ingest_squad(const std::filesystem::path& path);

// JSON lines: {query_id, query, query_type?, passages[] -> {passage_text,
// is_selected?}, answers[]}. Span labels come from the max-ROUGE-L search.
Dataset ingest_marco(const std::filesystem::path& path, std::size_t max_span_len = 50);

// Replaces every span label with the max-ROUGE-L span against the raw answers
// and recomputes the label upper bound.
void derive_spans(Dataset& data, std::size_t max_span_len = 50);

}  // namespace itr
