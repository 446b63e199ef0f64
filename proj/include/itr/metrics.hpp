#pragma once

#include "itr/text.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace itr {

using Words = std::vector<std::string>;

// Lowercase, drop ASCII punctuation, drop the articles a/an/the, split on
// whitespace.
Words normalize_answer(std::string_view text);

// Max over gold answers. Empty-vs-empty scores 1, empty-vs-nonempty 0.
double exact_match(std::string_view prediction, std::span<const std::string> golds);
double token_f1(std::string_view prediction, std::span<const std::string> golds);

std::size_t lcs_len(std::span<const std::string> a, std::span<const std::string> b);

// ROUGE-L F-measure: ((1 + beta^2) P R) / (R + beta^2 P) with P = LCS/|pred|,
// R = LCS/|ref|. Both empty -> 1; one empty -> 0.
double rouge_l(std::span<const std::string> prediction, std::span<const std::string> reference,
               double beta = 1.0);
// Max over gold answers, on normalized tokens.
double rouge_l(std::string_view prediction, std::span<const std::string> golds, double beta = 1.0);

inline constexpr int kBleuMaxOrder = 4;

// Sufficient statistics of one (prediction, references) pair for corpus BLEU.
struct BleuStats {
  std::array<std::size_t, kBleuMaxOrder> matches{};
  std::array<std::size_t, kBleuMaxOrder> totals{};
  std::size_t pred_len = 0;
  std::size_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& o);
};

// Clipped n-gram counts against the references (clip = max count over
// references); the reference length is the one closest to the prediction,
// shorter on ties.
BleuStats bleu_stats(std::span<const std::string> prediction, std::span<const Words> references,
                     int max_n = kBleuMaxOrder);

// Corpus BLEU from accumulated statistics: p_1 unsmoothed, add-one smoothing
// for n >= 2, geometric mean, brevity penalty exp(1 - r/c) when c < r.
double bleu_score(const BleuStats& stats, int max_n = kBleuMaxOrder);

// Corpus BLEU over aligned lists. Throws on an empty corpus.
double bleu(std::span<const Words> predictions, std::span<const Words> references, int max_n = kBleuMaxOrder);
double bleu(std::span<const Words> predictions, std::span<const std::vector<Words>> references,
            int max_n = kBleuMaxOrder);

// Result of the max-ROUGE span search. `passage` is empty when no span has a
// positive score (the example has no usable label).
struct SpanLabel {
  std::optional<std::size_t> passage;
  TokenSpan span;
  double score = 0.0;

  bool empty() const { return !passage.has_value(); }
};

// Lowercased surface tokens used by the span labeler.
Words label_tokens(const std::vector<Token>& tokens);

// Exhaustive search over spans of at most max_len tokens in every passage for
// the span with the highest ROUGE-L against the free-form answer. Ties go to
// the earliest passage, then earliest start, then the shortest span.
SpanLabel max_rouge_span(std::span<const std::vector<Token>> passages, std::string_view answer,
                         std::size_t max_len = 50, double beta = 1.0);

// ---------------------------------------------------------------------------
// Dataset-level evaluation

struct EvalItem {
  std::string id;
  std::string prediction;
  std::vector<std::string> golds;
  std::string question;
  std::optional<std::string> query_type;
};

struct ExampleScore {
  std::string id;
  std::string prediction;
  double em = 0.0;
  double f1 = 0.0;
  double rouge_l = 0.0;
  BleuStats bleu;
  std::size_t answer_length = 0;
  std::string question_word;
  std::optional<std::string> query_type;
};

struct EvalReport {
  std::vector<ExampleScore> examples;
  double em = 0.0;
  double f1 = 0.0;
  double bleu = 0.0;
  double rouge_l = 0.0;
};

EvalReport evaluate(std::span<const EvalItem> items, double rouge_beta = 1.0);

enum class BreakdownKey { AnswerLength, QuestionWord, QueryType };

BreakdownKey parse_breakdown_key(std::string_view name);
std::string to_string(BreakdownKey key);

// "1".."5", "6-10", "11+" ("0" for empty gold answers).
std::string answer_length_bucket(std::size_t length);
// What/Who/When/Which/Where/Why/How or "other", from the first token.
std::string question_word(std::string_view question);

struct BreakdownRow {
  std::string bucket;
  std::size_t count = 0;
  double em = 0.0;
  double f1 = 0.0;
  double rouge_l = 0.0;
  double bleu = 0.0;
};

// Rows in canonical bucket order; buckets with no examples are omitted.
std::vector<BreakdownRow> breakdown(const EvalReport& report, BreakdownKey key);

void write_report_json(const EvalReport& report, const std::filesystem::path& path);
void write_aggregate_tsv(const EvalReport& report, const std::filesystem::path& path);
void write_breakdown_tsv(const std::vector<BreakdownRow>& rows, BreakdownKey key,
                         const std::filesystem::path& path);

}  // namespace itr
