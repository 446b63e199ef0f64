#include <doctest.h>

#include "itr/dataset.hpp"
#include "itr/errors.hpp"

#include <filesystem>
#include <fstream>
#include <string>

using namespace itr;
namespace fs = std::filesystem;

namespace {

fs::path write_file(const std::string& name, const std::string& body) {
  const auto path = fs::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out << body;
  return path;
}

const char* kSquad = R"({"version": "1.1", "data": [{"title": "t", "paragraphs": [{
  "context": "The Nile is the longest river in Africa.",
  "qas": [
    {"id": "q1", "question": "What is the longest river in Africa?",
     "answers": [{"text": "The Nile", "answer_start": 0}, {"text": "Nile", "answer_start": 4}]},
    {"id": "q2", "question": "Where is the Nile?",
     "answers": [{"text": "Africa", "answer_start": 33}]}
  ]}]}]})";

}  // namespace

TEST_CASE("ingest_squad aligns answers to token spans") {
  const auto data = ingest_squad(write_file("itr_squad.json", kSquad));
  REQUIRE(data.examples.size() == 2);
  const auto& ex = data.examples[0];
  CHECK(ex.id == "q1");
  CHECK(ex.raw_answers.size() == 2);
  REQUIRE(ex.answerable());
  CHECK(*ex.passages[0].gold == TokenSpan{0, 1});
  CHECK(*data.examples[1].passages[0].gold == TokenSpan{7, 7});
  CHECK(data.skipped_answers == 0);
}

TEST_CASE("ingest_squad rejects malformed answers and duplicate ids") {
  const std::string bad = R"({"data": [{"paragraphs": [{"context": "x y", "qas": [
    {"id": "q", "question": "x?", "answers": "x"}]}]}]})";
  try {
    ingest_squad(write_file("itr_squad_bad.json", bad));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("answers") != std::string::npos);
  }
  const std::string dup = R"({"data": [{"paragraphs": [{"context": "x y", "qas": [
    {"id": "q", "question": "x?", "answers": []}, {"id": "q", "question": "y?", "answers": []}]}]}]})";
  CHECK_THROWS_AS(ingest_squad(write_file("itr_squad_dup.json", dup)), ParseError);
}

TEST_CASE("ingest_squad skips unalignable answers with a count") {
  const std::string text = R"({"data": [{"paragraphs": [{"context": "red green", "qas": [
    {"id": "q", "question": "x?", "answers": [{"text": "blue", "answer_start": 0}]}]}]}]})";
  const auto data = ingest_squad(write_file("itr_squad_skip.json", text));
  CHECK(data.skipped_answers == 1);
  REQUIRE(data.examples.size() == 1);
  CHECK_FALSE(data.examples[0].answerable());
}

TEST_CASE("ingest_marco derives spans and the label upper bound") {
  const std::string lines =
      R"({"query_id": 1, "query": "what color is the sky", "query_type": "description", "passages": [{"passage_text": "grass is green", "is_selected": 0}, {"passage_text": "on clear days the sky is blue", "is_selected": 1}], "answers": ["the sky is blue"]})"
      "\n"
      R"({"query_id": 2, "query": "who", "passages": [{"passage_text": "nobody knows"}], "answers": ["zebra crossing"]})"
      "\n"
      R"({"query_id": 3, "query": "empty", "passages": [{"passage_text": ""}], "answers": ["x"]})"
      "\n"
      R"({"query_id": 4, "query": "no answers", "passages": [{"passage_text": "some text"}]})"
      "\n";
  const auto data = ingest_marco(write_file("itr_marco.jsonl", lines));
  REQUIRE(data.examples.size() == 3);
  CHECK(data.skipped_examples == 1);
  const auto& ex = data.examples[0];
  REQUIRE(ex.answerable());
  CHECK(*ex.gold_passage == 1);
  CHECK(ex.label_score == doctest::Approx(1.0));
  CHECK(ex.query_type == std::optional<std::string>("description"));
  CHECK(ex.passages[1].selected);
  CHECK_FALSE(data.examples[1].answerable());
  CHECK(data.examples[2].raw_answers.empty());
  REQUIRE(data.label_upper_bound);
  CHECK(*data.label_upper_bound == doctest::Approx((1.0 + 0.0) / 2.0));
}

TEST_CASE("dataset files round trip") {
  const auto data = ingest_squad(write_file("itr_squad_rt.json", kSquad));
  const auto path = fs::temp_directory_path() / "itr_dataset_rt.json";
  save_dataset(data, path);
  const auto back = load_dataset(path);
  REQUIRE(back.examples.size() == data.examples.size());
  CHECK(back.examples[0].raw_answers == data.examples[0].raw_answers);
  CHECK(back.examples[0].passages[0].tokens == data.examples[0].passages[0].tokens);
  CHECK(*back.examples[1].passages[0].gold == *data.examples[1].passages[0].gold);
}

TEST_CASE("derive_spans relabels from raw answers") {
  auto data = ingest_squad(write_file("itr_squad_derive.json", kSquad));
  derive_spans(data, 3);
  REQUIRE(data.examples[0].answerable());
  CHECK(*data.examples[0].passages[0].gold == TokenSpan{0, 1});
  REQUIRE(data.label_upper_bound);
}
