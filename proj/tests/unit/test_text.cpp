#include <doctest.h>

#include "itr/errors.hpp"
#include "itr/text.hpp"

#include <filesystem>
#include <fstream>

using namespace itr;

TEST_CASE("tokenize splits punctuation and keeps byte offsets") {
  const std::string text = "Hello, world (again)!";
  const auto toks = tokenize(text);
  REQUIRE(toks.size() == 7);
  CHECK(toks[0].text == "Hello");
  CHECK(toks[1].text == ",");
  CHECK(toks[3].text == "(");
  CHECK(toks[6].text == "!");
  for (const auto& t : toks) CHECK(text.substr(t.char_start, t.char_end - t.char_start) == t.text);
}

TEST_CASE("tokenize splits inner hyphens and slashes") {
  const auto toks = tokenize("state-of-art a/b");
  REQUIRE(toks.size() == 8);
  CHECK(toks[1].text == "-");
  CHECK(toks[6].text == "/");
}

TEST_CASE("tokenize handles empty and whitespace-only text") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("  \t\n ").empty());
}

TEST_CASE("utf8 round trip and multibyte offsets") {
  const std::string text = "caf\xc3\xa9 na\xc3\xafve";
  CHECK(encode_utf8(decode_utf8(text)) == text);
  CHECK(decode_utf8(text).size() == 10);
  const auto toks = tokenize(text);
  REQUIRE(toks.size() == 2);
  CHECK(toks[0].char_end == 5);
  CHECK(toks[1].char_start == 6);
}

TEST_CASE("trigrams are boundary framed multisets") {
  const auto tri = trigrams("aaa");
  REQUIRE(tri.size() == 3);
  CHECK(tri[0] == "#aa");
  CHECK(tri[1] == "aaa");
  CHECK(tri[2] == "aa#");
  CHECK(trigrams("a").size() == 1);
  CHECK(trigram_ids("").empty());
  for (auto id : trigram_ids("reasoning")) CHECK(id < kTrigramBuckets);
  CHECK(trigram_ids("word") == trigram_ids("word"));
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 2166136261u);
  CHECK(fnv1a("a") == 0xe40c292cu);
}

TEST_CASE("vocab lookup falls back to lowercase then unk") {
  Vocab v;
  CHECK(v.word_count() == 2);
  const auto id = v.add_word("river");
  CHECK(v.word_id("river") == id);
  CHECK(v.word_id("River") == id);
  CHECK(v.word_id("lake") == Vocab::kUnk);
  CHECK(v.add_word("river") == id);
  const auto f = v.features(tokenize("River lake"));
  CHECK(f.words == std::vector<std::size_t>{id, Vocab::kUnk});
  CHECK(f.chars[0].size() == 5);
  CHECK(f.trigrams[1].size() == 4);
}

TEST_CASE("vocab save and load preserve ids and hash") {
  Vocab v;
  v.add_word("alpha");
  v.add_word("beta");
  const auto path = std::filesystem::temp_directory_path() / "itr_unit_vocab.txt";
  v.save(path);
  const Vocab w = Vocab::load(path);
  CHECK(w.hash() == v.hash());
  CHECK(w.word_id("beta") == v.word_id("beta"));
  Vocab other;
  other.add_word("alpha");
  CHECK(other.hash() != v.hash());
}

TEST_CASE("pretrained vectors fill known rows and keep pad zero") {
  const auto path = std::filesystem::temp_directory_path() / "itr_unit_vectors.txt";
  {
    std::ofstream out(path);
    out << "alpha 1 2 3\nzzz 4 5 6\n";
  }
  Vocab v;
  const auto a = v.add_word("alpha");
  v.add_word("beta");
  Rng rng(1);
  const auto table = load_pretrained_vectors(path, v, 3, rng);
  CHECK(table.rows() == 4);
  CHECK(table(static_cast<Index>(a), 1) == doctest::Approx(2.0f));
  CHECK(table.row(Vocab::kPad).isZero());
  CHECK(vector_file_words(path) == std::vector<std::string>{"alpha", "zzz"});
  Rng rng2(1);
  CHECK_THROWS_AS(load_pretrained_vectors(path, v, 4, rng2), ConfigError);
}

TEST_CASE("answer alignment and span text") {
  const std::string passage = "The river Nile flows north.";
  const auto toks = tokenize(passage);
  const auto al = align_answer_to_span(passage, toks, "river Nile", 4);
  CHECK(al.span == TokenSpan{1, 2});
  CHECK_FALSE(al.relocated);
  CHECK(span_text(passage, toks, al.span) == "river Nile");
  const auto moved = align_answer_to_span(passage, toks, "flows", 0);
  CHECK(moved.relocated);
  CHECK(moved.span == TokenSpan{3, 3});
  CHECK_THROWS(align_answer_to_span(passage, toks, "ocean", 0));
}
