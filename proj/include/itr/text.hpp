#pragma once

#include "itr/rng.hpp"
#include "itr/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace itr {

// A token and its [char_start, char_end) byte range in the source text.
struct Token {
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  bool operator==(const Token&) const = default;
};

// Whitespace split, then leading/trailing ASCII punctuation and inner '-' or
// '/' characters become single-character tokens. Offsets are byte offsets.
std::vector<Token> tokenize(std::string_view text);

// Tokens joined by single spaces.
std::string join_tokens(const std::vector<Token>& tokens);

// UTF-8 decode; invalid bytes map to themselves.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

inline constexpr std::uint32_t kTrigramBuckets = 50000;

// 32-bit FNV-1a over the bytes of `s`.
std::uint32_t fnv1a(std::string_view s);

// Boundary-framed letter trigrams of a word ("#word#"), hashed into
// [0, kTrigramBuckets). Duplicates are kept (multiset). An empty word yields
// no ids.
std::vector<std::size_t> trigram_ids(std::string_view word);

// Same trigrams as strings, for inspection.
std::vector<std::string> trigrams(std::string_view word);

// Per-token model inputs.
struct TokenFeatures {
  std::vector<std::size_t> words;
  std::vector<std::vector<std::size_t>> chars;
  std::vector<std::vector<std::size_t>> trigrams;

  std::size_t size() const { return words.size(); }
};

class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;

  Vocab();

  // Adds a word (case preserved) and its characters. Returns the word id.
  std::size_t add_word(const std::string& word);
  void add_chars(std::string_view word);

  bool contains(const std::string& word) const { return word_ids_.count(word) != 0; }
  // Exact match, then lowercase, then UNK.
  std::size_t word_id(const std::string& word) const;
  std::size_t char_id(char32_t c) const;
  const std::string& word(std::size_t id) const { return words_.at(id); }

  std::size_t word_count() const { return words_.size(); }
  std::size_t char_count() const { return chars_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<char32_t>& chars() const { return chars_; }

  TokenFeatures features(const std::vector<Token>& tokens) const;

  // Deterministic digest of both tables.
  std::uint64_t hash() const;

  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> word_ids_;
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, std::size_t> char_ids_;
};

// Embedding matrix (vocab x dim) from a text file of "word v1 ... v_dim"
// lines. Rows for words absent from the file are drawn from
// N(0, init_std^2); the PAD row is zero. A missing path yields the random
// initialization only.
Tensor<float> load_pretrained_vectors(const std::filesystem::path& path, const Vocab& vocab,
                                      std::size_t dim, Rng& rng, double init_std = 0.01);

// Words present in a vector file, without reading the values.
std::vector<std::string> vector_file_words(const std::filesystem::path& path);

struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive

  bool operator==(const TokenSpan&) const = default;
};

struct Alignment {
  TokenSpan span;
  // The answer text was not found at the given offset; the span comes from
  // the nearest occurrence in the passage.
  bool relocated = false;
};

// Tokens intersecting [answer_char_start, answer_char_start + |answer|).
Alignment align_answer_to_span(std::string_view passage_text, const std::vector<Token>& passage,
                               std::string_view answer_text, std::size_t answer_char_start);

// Raw text between the first token's start and the last token's end.
std::string span_text(std::string_view source, const std::vector<Token>& tokens, TokenSpan span);

}  // namespace itr
