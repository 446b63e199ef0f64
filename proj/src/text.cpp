#include "itr/text.hpp"

#include "itr/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace itr {
namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

bool is_inner_split(unsigned char c) { return c == '-' || c == '/'; }

std::string to_lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    if (b < e) out.push_back({std::string(text.substr(b, e - b)), b, e});
  };
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    std::size_t b = i;
    while (i < n && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t e = i;

    std::size_t core_b = b;
    while (core_b < e && is_punct(static_cast<unsigned char>(text[core_b]))) ++core_b;
    std::size_t core_e = e;
    while (core_e > core_b && is_punct(static_cast<unsigned char>(text[core_e - 1]))) --core_e;

    for (std::size_t k = b; k < core_b; ++k) emit(k, k + 1);
    std::size_t piece = core_b;
    for (std::size_t k = core_b; k < core_e; ++k) {
      if (is_inner_split(static_cast<unsigned char>(text[k]))) {
        emit(piece, k);
        emit(k, k + 1);
        piece = k + 1;
      }
    }
    emit(piece, core_e);
    for (std::size_t k = core_e; k < e; ++k) emit(k, k + 1);
  }
  return out;
}

std::string join_tokens(const std::vector<Token>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i].text;
  }
  return s;
}

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    char32_t cp = c;
    bool ok = true;
    if (c < 0x80) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      ok = false;
    }
    if (ok && i + extra >= text.size() + (extra == 0 ? 1 : 0)) ok = false;
    for (std::size_t k = 1; ok && k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(c);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }
  return out;
}

std::uint32_t fnv1a(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 16777619u;
  }
  return h;
}

std::vector<std::string> trigrams(std::string_view word) {
  std::vector<std::string> out;
  if (word.empty()) return out;
  std::u32string framed = U"#" + decode_utf8(word) + U"#";
  for (std::size_t i = 0; i + 3 <= framed.size(); ++i) {
    out.push_back(encode_utf8(std::u32string_view(framed).substr(i, 3)));
  }
  return out;
}

std::vector<std::size_t> trigram_ids(std::string_view word) {
  std::vector<std::size_t> ids;
  for (const std::string& g : trigrams(word)) ids.push_back(fnv1a(g) % kTrigramBuckets);
  return ids;
}

Vocab::Vocab() {
  add_word("<pad>");
  add_word("<unk>");
  chars_ = {U'\0', U'\1'};
  char_ids_[U'\0'] = 0;
  char_ids_[U'\1'] = 1;
}

std::size_t Vocab::add_word(const std::string& word) {
  if (auto it = word_ids_.find(word); it != word_ids_.end()) return it->second;
  const std::size_t id = words_.size();
  words_.push_back(word);
  word_ids_.emplace(word, id);
  return id;
}

void Vocab::add_chars(std::string_view word) {
  for (char32_t c : decode_utf8(word)) {
    if (char_ids_.count(c)) continue;
    char_ids_.emplace(c, chars_.size());
    chars_.push_back(c);
  }
}

std::size_t Vocab::word_id(const std::string& word) const {
  if (auto it = word_ids_.find(word); it != word_ids_.end()) return it->second;
  if (auto it = word_ids_.find(to_lower_ascii(word)); it != word_ids_.end()) return it->second;
  return kUnk;
}

std::size_t Vocab::char_id(char32_t c) const {
  auto it = char_ids_.find(c);
  return it == char_ids_.end() ? kUnk : it->second;
}

TokenFeatures Vocab::features(const std::vector<Token>& tokens) const {
  TokenFeatures f;
  f.words.reserve(tokens.size());
  for (const Token& t : tokens) {
    f.words.push_back(word_id(t.text));
    std::vector<std::size_t> cs;
    for (char32_t c : decode_utf8(t.text)) cs.push_back(char_id(c));
    f.chars.push_back(std::move(cs));
    f.trigrams.push_back(trigram_ids(t.text));
  }
  return f;
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::string_view s) {
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    h ^= 0xFF;
    h *= 1099511628211ULL;
  };
  for (const auto& w : words_) mix(w);
  for (char32_t c : chars_) mix(std::to_string(static_cast<std::uint32_t>(c)));
  return h;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write vocabulary " + path.string());
  out << "words " << words_.size() << '\n';
  for (const auto& w : words_) out << w << '\n';
  out << "chars " << chars_.size() << '\n';
  for (char32_t c : chars_) out << static_cast<std::uint32_t>(c) << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read vocabulary " + path.string());
  Vocab v;
  v.words_.clear();
  v.word_ids_.clear();
  v.chars_.clear();
  v.char_ids_.clear();
  std::string tag;
  std::size_t n = 0;
  if (!(in >> tag >> n) || tag != "words") throw ParseError(path.string() + ": missing words header");
  std::string line;
  std::getline(in, line);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw ParseError(path.string() + ": truncated word list");
    v.word_ids_.emplace(line, v.words_.size());
    v.words_.push_back(line);
  }
  if (!(in >> tag >> n) || tag != "chars") throw ParseError(path.string() + ": missing chars header");
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t c = 0;
    if (!(in >> c)) throw ParseError(path.string() + ": truncated char list");
    v.char_ids_.emplace(static_cast<char32_t>(c), v.chars_.size());
    v.chars_.push_back(static_cast<char32_t>(c));
  }
  return v;
}

Tensor<float> load_pretrained_vectors(const std::filesystem::path& path, const Vocab& vocab,
                                      std::size_t dim, Rng& rng, double init_std) {
  const auto rows = static_cast<Index>(vocab.word_count());
  const auto cols = static_cast<Index>(dim);
  Tensor<float> table(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) table(r, c) = static_cast<float>(rng.normal(0.0, init_std));
  }
  table.row(static_cast<Index>(Vocab::kPad)).setZero();
  if (path.empty() || !std::filesystem::exists(path)) return table;

  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read vectors " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    std::vector<float> values;
    std::string tok;
    while (fields >> tok) {
      float v = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed value '" + tok + "'");
      }
      values.push_back(v);
    }
    if (values.empty()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": word without values");
    }
    if (values.size() != dim) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": vector has " +
                        std::to_string(values.size()) + " values, configured dimension is " +
                        std::to_string(dim));
    }
    if (!vocab.contains(word)) continue;
    const auto id = static_cast<Index>(vocab.word_id(word));
    if (id == static_cast<Index>(Vocab::kPad)) continue;
    for (Index c = 0; c < cols; ++c) table(id, c) = values[static_cast<std::size_t>(c)];
  }
  return table;
}

std::vector<std::string> vector_file_words(const std::filesystem::path& path) {
  std::vector<std::string> words;
  if (path.empty() || !std::filesystem::exists(path)) return words;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    const auto sp = line.find(' ');
    if (sp != std::string::npos && sp > 0) words.push_back(line.substr(0, sp));
  }
  return words;
}

Alignment align_answer_to_span(std::string_view passage_text, const std::vector<Token>& passage,
                               std::string_view answer_text, std::size_t answer_char_start) {
  if (answer_char_start >= passage_text.size()) {
    throw AlignmentError("answer offset " + std::to_string(answer_char_start) + " outside passage of " +
                         std::to_string(passage_text.size()) + " bytes");
  }
  Alignment result;
  std::size_t begin = answer_char_start;
  if (passage_text.substr(begin, answer_text.size()) != answer_text) {
    // Best effort: nearest occurrence of the answer text.
    std::size_t best = std::string_view::npos;
    std::size_t best_dist = std::string_view::npos;
    for (std::size_t pos = passage_text.find(answer_text); pos != std::string_view::npos;
         pos = passage_text.find(answer_text, pos + 1)) {
      const std::size_t dist = pos > begin ? pos - begin : begin - pos;
      if (dist < best_dist) {
        best_dist = dist;
        best = pos;
      }
    }
    if (best == std::string_view::npos || answer_text.empty()) {
      throw AlignmentError("answer '" + std::string(answer_text) + "' not found in passage");
    }
    begin = best;
    result.relocated = true;
  }
  const std::size_t end = begin + std::max<std::size_t>(answer_text.size(), 1);
  bool found = false;
  for (std::size_t i = 0; i < passage.size(); ++i) {
    const Token& t = passage[i];
    if (t.char_end > begin && t.char_start < end) {
      if (!found) result.span.start = i;
      result.span.end = i;
      found = true;
    }
  }
  if (!found) {
    throw AlignmentError("answer at offset " + std::to_string(begin) + " covers no token");
  }
  return result;
}

std::string span_text(std::string_view source, const std::vector<Token>& tokens, TokenSpan span) {
  if (tokens.empty() || span.end >= tokens.size() || span.start > span.end) {
    throw LookupError("span_text: span (" + std::to_string(span.start) + ", " + std::to_string(span.end) +
                      ") outside " + std::to_string(tokens.size()) + " tokens");
  }
  const std::size_t b = tokens[span.start].char_start;
  const std::size_t e = tokens[span.end].char_end;
  return std::string(source.substr(b, e - b));
}

}  // namespace itr
