#include <doctest.h>

#include "itr/errors.hpp"
#include "itr/metrics.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace itr;

namespace {
std::vector<std::string> golds(std::initializer_list<const char*> g) { return {g.begin(), g.end()}; }
}  // namespace

TEST_CASE("normalize_answer lowercases and drops punctuation and articles") {
  CHECK(normalize_answer("The  Cat, sat.") == Words{"cat", "sat"});
  CHECK(normalize_answer("an apple") == Words{"apple"});
  CHECK(normalize_answer("").empty());
}

TEST_CASE("exact match and F1 hand cases") {
  CHECK(exact_match("the Cat", golds({"cat"})) == 1.0);
  CHECK(exact_match("live performance", golds({"material about live performance"})) == 0.0);
  CHECK(token_f1("live performance", golds({"material about live performance"})) == doctest::Approx(2.0 / 3.0));
  CHECK(token_f1("a b", golds({"c", "b a"})) == 1.0);
  CHECK(exact_match("", golds({""})) == 1.0);
  CHECK(token_f1("", golds({""})) == 1.0);
  CHECK(token_f1("", golds({"x"})) == 0.0);
  CHECK(exact_match("x", golds({""})) == 0.0);
}

TEST_CASE("F1 uses multiset overlap") {
  CHECK(token_f1("a a b", golds({"a b b"})) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("lcs and ROUGE-L hand cases") {
  const Words pred = {"the", "cat"};
  const Words ref = {"the", "cat", "sat"};
  CHECK(lcs_len(pred, ref) == 2);
  CHECK(rouge_l(pred, ref) == doctest::Approx(0.8));
  CHECK(rouge_l(Words{}, Words{}) == 1.0);
  CHECK(rouge_l(Words{}, ref) == 0.0);
  CHECK(lcs_len(Words{"a", "b", "c", "d"}, Words{"b", "d", "a"}) == 2);
}

TEST_CASE("ROUGE-L beta weights recall") {
  const Words pred = {"x"};
  const Words ref = {"x", "y", "z", "w"};
  // P = 1, R = 0.25
  CHECK(rouge_l(pred, ref, 1.0) == doctest::Approx(0.4));
  CHECK(rouge_l(pred, ref, 2.0) == doctest::Approx(5.0 * 0.25 / (0.25 + 4.0)));
}

TEST_CASE("BLEU brevity penalty and perfect match") {
  const std::vector<Words> preds = {{"a", "b", "c", "d"}};
  const std::vector<Words> refs = {{"a", "b", "c", "d", "e"}};
  CHECK(bleu(preds, refs) == doctest::Approx(std::exp(-0.25)).epsilon(1e-9));
  CHECK(bleu(refs, refs) == doctest::Approx(1.0));
  CHECK_THROWS(bleu(std::vector<Words>{}, std::vector<Words>{}));
}

TEST_CASE("BLEU clips counts by the best reference") {
  const Words pred = {"the", "the", "the"};
  const std::vector<Words> refs = {{"the", "cat"}, {"the", "the", "dog"}};
  const auto s = bleu_stats(pred, refs);
  CHECK(s.matches[0] == 2);
  CHECK(s.totals[0] == 3);
  CHECK(s.ref_len == 3);
}

TEST_CASE("metric values stay in range on random pairs") {
  Rng rng(9);
  const char* vocab[] = {"a", "b", "c", "the", "d", ",", "E"};
  auto random_text = [&] {
    std::string t;
    const auto n = rng.below(6);
    for (std::size_t i = 0; i < n; ++i) t += std::string(i ? " " : "") + vocab[rng.below(7)];
    return t;
  };
  for (int i = 0; i < 300; ++i) {
    const std::string p = random_text();
    const std::vector<std::string> g = {random_text()};
    const double em = exact_match(p, g);
    const double f1 = token_f1(p, g);
    const double r = rouge_l(p, g);
    CHECK(f1 >= 0.0);
    CHECK(f1 <= 1.0);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    CHECK(em <= f1);
    if (em == 1.0) CHECK(r == 1.0);
  }
}

TEST_CASE("max_rouge_span finds verbatim answers and reports empties") {
  const std::vector<std::vector<Token>> passages = {tokenize("nothing here at all"),
                                                    tokenize("the answer is blue sky today")};
  const auto lab = max_rouge_span(passages, "Blue sky", 5);
  REQUIRE_FALSE(lab.empty());
  CHECK(*lab.passage == 1);
  CHECK(lab.span == TokenSpan{3, 4});
  CHECK(lab.score == doctest::Approx(1.0));
  CHECK(max_rouge_span(passages, "zebra", 5).empty());
  CHECK(max_rouge_span(passages, "blue sky", 1).score == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("breakdown buckets and question words") {
  CHECK(answer_length_bucket(0) == "0");
  CHECK(answer_length_bucket(3) == "3");
  CHECK(answer_length_bucket(7) == "6-10");
  CHECK(answer_length_bucket(11) == "11+");
  CHECK(question_word("Who wrote it?") == "Who");
  CHECK(question_word("in which year") == "other");
  CHECK_THROWS_AS(parse_breakdown_key("colour"), ConfigError);
}

TEST_CASE("evaluate aggregates and breakdown counts") {
  std::vector<EvalItem> items = {
      {"1", "blue", {"blue"}, "What color?", std::nullopt},
      {"2", "red", {"green"}, "What color?", std::nullopt},
      {"3", "in 1990", {"1990"}, "When was it?", std::string("numeric")},
  };
  const auto report = evaluate(items);
  CHECK(report.examples.size() == 3);
  CHECK(report.em == doctest::Approx(1.0 / 3.0));
  const auto rows = breakdown(report, BreakdownKey::QuestionWord);
  std::size_t total = 0;
  for (const auto& r : rows) total += r.count;
  CHECK(total == 3);
  const auto dir = std::filesystem::temp_directory_path() / "itr_unit_metrics";
  std::filesystem::create_directories(dir);
  write_aggregate_tsv(report, dir / "aggregate.tsv");
  std::ifstream in(dir / "aggregate.tsv");
  std::string header;
  std::getline(in, header);
  CHECK(header.find("em") != std::string::npos);
}
