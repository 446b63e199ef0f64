#include "itr/synthetic.hpp"

#include "itr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace itr {
namespace {

const char* const kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "st", "kl"};
const char* const kVowels[] = {"a", "e", "i", "o", "u"};

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<std::string> sample_distinct(const std::vector<std::string>& pool, std::size_t k, Rng& rng) {
  if (k > pool.size()) throw ConfigError("synthetic corpus: pool too small");
  std::vector<std::string> copy = pool;
  for (std::size_t i = 0; i < k; ++i) std::swap(copy[i], copy[i + rng.below(copy.size() - i)]);
  copy.resize(k);
  return copy;
}

void append(std::vector<std::string>& dst, const std::vector<std::string>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

std::vector<std::string> word_pool(std::size_t count, Rng& rng, std::size_t min_syllables, std::size_t max_syllables) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > count * 1000 + 1000) throw ConfigError("word_pool: cannot generate enough distinct words");
    const std::size_t syl = min_syllables + rng.below(max_syllables - min_syllables + 1);
    std::string w;
    for (std::size_t s = 0; s < syl; ++s) {
      w += kOnsets[rng.below(std::size(kOnsets))];
      w += kVowels[rng.below(std::size(kVowels))];
    }
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

Example make_span_example(const std::string& id, const std::vector<std::string>& question,
                          const std::vector<std::string>& passage, std::size_t start, std::size_t end) {
  if (start > end || end >= passage.size()) throw ConfigError("make_span_example: span outside passage");
  Example ex;
  ex.id = id;
  ex.question_text = join_words(question);
  Passage p;
  p.text = join_words(passage);
  p.gold = TokenSpan{start, end};
  p.selected = true;
  ex.passages.push_back(std::move(p));
  ex.gold_passage = 0;
  ex.raw_answers.push_back(join_words(
      std::vector<std::string>(passage.begin() + static_cast<std::ptrdiff_t>(start),
                               passage.begin() + static_cast<std::ptrdiff_t>(end + 1))));
  finalize_example(ex);
  if (ex.passages[0].tokens.size() != passage.size()) {
    throw ConfigError("make_span_example: words must be single tokens");
  }
  return ex;
}

SyntheticCorpus synth_overfit(std::size_t examples, std::size_t vocab_size, std::size_t min_len, std::size_t max_len,
                              std::uint64_t seed) {
  const std::vector<std::string> qwords = {"what", "comes", "after", "?"};
  if (vocab_size <= qwords.size() + 4 || min_len < 4 || max_len < min_len) {
    throw ConfigError("synth_overfit: invalid sizes");
  }
  Rng rng(seed);
  const auto pool = word_pool(vocab_size - qwords.size(), rng);
  SyntheticCorpus c;
  c.vector_words = pool;
  append(c.vector_words, qwords);
  for (std::size_t i = 0; i < examples; ++i) {
    const std::size_t len = min_len + rng.below(max_len - min_len + 1);
    std::vector<std::string> words(len);
    for (auto& w : words) w = pool[rng.below(pool.size())];
    const std::size_t answer_len = 1 + rng.below(3);
    const std::size_t key = rng.below(len - answer_len);
    for (std::size_t j = 0; j < len; ++j) {
      while (j != key && words[j] == words[key]) words[j] = pool[rng.below(pool.size())];
    }
    std::vector<std::string> q = {"what", "comes", "after", words[key], "?"};
    c.train.examples.push_back(make_span_example("overfit-" + std::to_string(i), q, words, key + 1, key + answer_len));
  }
  c.dev = c.train;
  return c;
}

SyntheticCorpus synth_multihop(std::size_t train, std::size_t dev, std::size_t hops, std::uint64_t seed,
                               std::size_t chains, std::size_t name_count) {
  if (hops < 1 || hops > 4) throw ConfigError("synth_multihop: hops must be in 1..4");
  if (chains < 1) throw ConfigError("synth_multihop: at least one chain is required");
  Rng rng(seed);
  if (name_count < chains * hops) throw ConfigError("synth_multihop: too few names for the chains");
  const auto names = word_pool(name_count, rng, 2, 2);
  std::vector<std::string> cities;
  for (const auto& w : word_pool(12, rng, 3, 3)) cities.push_back(w + "ville");
  // Links between people: (sentence words, question phrase).
  const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> links = {
      {{"works", "with"}, {"the", "colleague", "of"}},
      {{"is", "married", "to"}, {"the", "spouse", "of"}},
      {{"is", "friends", "with"}, {"the", "friend", "of"}},
  };
  SyntheticCorpus c;
  c.vector_words = names;
  append(c.vector_words, cities);
  append(c.vector_words, {"where", "does", "live", "lives", "in", "?", "."});
  for (const auto& l : links) {
    append(c.vector_words, l.first);
    append(c.vector_words, l.second);
  }

  auto make = [&](const std::string& id) {
    const auto people = sample_distinct(names, chains * hops, rng);
    const auto places = sample_distinct(cities, chains, rng);
    std::vector<std::vector<std::string>> sentences;
    for (std::size_t ch = 0; ch < chains; ++ch) {
      for (std::size_t h = 0; h + 1 < hops; ++h) {
        std::vector<std::string> s = {people[ch * hops + h]};
        append(s, links[h].first);
        s.push_back(people[ch * hops + h + 1]);
        s.push_back(".");
        sentences.push_back(std::move(s));
      }
      sentences.push_back({people[ch * hops + hops - 1], "lives", "in", places[ch], "."});
    }
    rng.shuffle(sentences);
    std::vector<std::string> passage;
    std::size_t answer = 0;
    for (const auto& s : sentences) {
      for (const auto& w : s) {
        if (w == places[0]) answer = passage.size();
        passage.push_back(w);
      }
    }
    std::vector<std::string> q = {"where", "does"};
    for (std::size_t h = hops - 1; h-- > 0;) append(q, links[h].second);
    q.push_back(people[0]);
    q.push_back("live");
    q.push_back("?");
    return make_span_example(id, q, passage, answer, answer);
  };
  for (std::size_t i = 0; i < train; ++i) c.train.examples.push_back(make("hop-train-" + std::to_string(i)));
  for (std::size_t i = 0; i < dev; ++i) c.dev.examples.push_back(make("hop-dev-" + std::to_string(i)));
  return c;
}

SyntheticCorpus synth_oov(std::size_t train, std::size_t dev, std::uint64_t seed) {
  Rng rng(seed);
  const auto names = word_pool(300, rng, 2, 3);
  const auto things = word_pool(20, rng, 2, 2);
  const std::set<std::string> known(names.begin(), names.end());
  const char* const suffixes[] = {"s", "n", "y", "x"};
  auto variant = [&](const std::string& name) {
    for (;;) {
      std::string v = name;
      if (rng.bernoulli(0.5)) {
        v += suffixes[rng.below(std::size(suffixes))];
      } else {
        v.insert(v.begin() + static_cast<std::ptrdiff_t>(1 + rng.below(v.size() - 1)), v[rng.below(v.size())]);
      }
      if (!known.count(v)) return v;
    }
  };
  SyntheticCorpus c;
  c.vector_words = things;
  append(c.vector_words, {"what", "did", "buy", "bought", "a", "?", "."});
  const std::size_t people = 3;
  auto make = [&](const std::string& id, bool oov) {
    auto who = sample_distinct(names, people, rng);
    if (oov) {
      for (auto& w : who) w = variant(w);
    }
    const auto what = sample_distinct(things, people, rng);
    std::vector<std::string> passage;
    std::size_t answer = 0;
    for (std::size_t k = 0; k < people; ++k) {
      passage.insert(passage.end(), {who[k], "bought", "a"});
      if (k == 0) answer = passage.size();
      passage.insert(passage.end(), {what[k], "."});
    }
    // Move the asked-about fact to a random position among the sentences.
    const std::size_t sentence_len = 5;
    const std::size_t slot = rng.below(people);
    if (slot != 0) {
      std::swap_ranges(passage.begin(), passage.begin() + sentence_len,
                       passage.begin() + static_cast<std::ptrdiff_t>(slot * sentence_len));
      answer += slot * sentence_len;
    }
    return make_span_example(id, {"what", "did", who[0], "buy", "?"}, passage, answer, answer);
  };
  for (std::size_t i = 0; i < train; ++i) c.train.examples.push_back(make("oov-train-" + std::to_string(i), false));
  for (std::size_t i = 0; i < dev; ++i) c.dev.examples.push_back(make("oov-dev-" + std::to_string(i), true));
  return c;
}

SyntheticCorpus synth_ranker(std::size_t train, std::size_t dev, std::size_t passages, std::uint64_t seed) {
  if (passages < 2) throw ConfigError("synth_ranker: need at least two passages per query");
  Rng rng(seed);
  const auto pool = word_pool(400, rng, 2, 3);
  const auto answers = word_pool(40, rng, 3, 3);
  SyntheticCorpus c;
  c.vector_words = pool;
  append(c.vector_words, answers);
  append(c.vector_words, {"is", "?", "."});
  const std::size_t key_len = 3;
  const std::size_t filler = 8;

  auto make = [&](const std::string& id) {
    // Topic words for the relevant passage and one disjoint word set per
    // distractor.
    const auto words = sample_distinct(pool, (key_len + filler) * passages, rng);
    auto chunk = [&](std::size_t j) {
      return std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(j * (key_len + filler)),
                                      words.begin() + static_cast<std::ptrdiff_t>((j + 1) * (key_len + filler)));
    };
    const std::size_t gold = rng.below(passages);
    Example ex;
    ex.id = id;
    std::vector<std::string> question;
    for (std::size_t j = 0; j < passages; ++j) {
      const auto w = chunk(j);
      const std::vector<std::string> key(w.begin(), w.begin() + key_len);
      const std::string ans = answers[rng.below(answers.size())];
      std::vector<std::string> text;
      const std::size_t split = rng.below(filler + 1);
      text.insert(text.end(), w.begin() + key_len, w.begin() + static_cast<std::ptrdiff_t>(key_len + split));
      if (!text.empty()) text.push_back(".");
      append(text, key);
      text.push_back("is");
      const std::size_t at = text.size();
      text.push_back(ans);
      text.push_back(".");
      text.insert(text.end(), w.begin() + static_cast<std::ptrdiff_t>(key_len + split), w.end());
      if (split < filler) text.push_back(".");
      Passage p;
      p.text = join_words(text);
      p.selected = j == gold;
      if (j == gold) {
        p.gold = TokenSpan{at, at};
        question = key;
        question.push_back("?");
        ex.raw_answers.push_back(ans);
      }
      ex.passages.push_back(std::move(p));
    }
    ex.gold_passage = gold;
    ex.question_text = join_words(question);
    finalize_example(ex);
    return ex;
  };
  for (std::size_t i = 0; i < train; ++i) c.train.examples.push_back(make("rank-train-" + std::to_string(i)));
  for (std::size_t i = 0; i < dev; ++i) c.dev.examples.push_back(make("rank-dev-" + std::to_string(i)));
  return c;
}

SyntheticCorpus synth_by_name(const std::string& kind, std::size_t train, std::size_t dev, std::uint64_t seed) {
  if (kind == "overfit") return synth_overfit(train, 200, 20, 40, seed);
  if (kind == "multihop") return synth_multihop(train, dev, 3, seed);
  if (kind == "oov") return synth_oov(train, dev, seed);
  if (kind == "ranker") return synth_ranker(train, dev, 5, seed);
  throw ConfigError("unknown synthetic corpus '" + kind + "' (overfit | multihop | oov | ranker)");
}

void write_vectors(const std::filesystem::path& path, const std::vector<std::string>& words, std::size_t dim,
                   std::uint64_t seed) {
  if (dim == 0) throw ConfigError("write_vectors: dimension must be positive");
  Rng rng(seed);
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
  char buf[32];
  for (const auto& w : words) {
    out << w;
    for (std::size_t k = 0; k < dim; ++k) {
      std::snprintf(buf, sizeof(buf), " %.6f", rng.normal(0.0, sd));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace itr
