#pragma once

#include "itr/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

// Deterministic toy corpora for the acceptance experiments.
namespace itr {

struct SyntheticCorpus {
  Dataset train;
  Dataset dev;
  // Words that get a pretrained vector.
  std::vector<std::string> vector_words;
};

// `count` distinct pronounceable lowercase words.
std::vector<std::string> word_pool(std::size_t count, Rng& rng, std::size_t min_syllables = 2,
                                   std::size_t max_syllables = 3);

// Single-passage example from space-separated words; the gold span covers
// words [start, end].
Example make_span_example(const std::string& id, const std::vector<std::string>& question,
                          const std::vector<std::string>& passage, std::size_t start, std::size_t end);

// Random passages over a fixed vocabulary; the answer is the one to three
// words following the key word named in the question.
SyntheticCorpus synth_overfit(std::size_t examples, std::size_t vocab_size, std::size_t min_len, std::size_t max_len,
                              std::uint64_t seed);

// Chained facts ("a works with b . b is married to c . c lives in x .") for
// several people in shuffled order. Questions follow `hops` links from the
// named person to a city.
SyntheticCorpus synth_multihop(std::size_t train, std::size_t dev, std::size_t hops, std::uint64_t seed,
                               std::size_t chains = 3, std::size_t name_count = 60);

// "name bought a thing ." facts; dev names are surface variants of training
// names that are absent from the vocabulary.
SyntheticCorpus synth_oov(std::size_t train, std::size_t dev, std::uint64_t seed);

// Queries with `passages` candidates: one relevant passage sharing the
// query's words and distractors drawn from disjoint words.
SyntheticCorpus synth_ranker(std::size_t train, std::size_t dev, std::size_t passages, std::uint64_t seed);

SyntheticCorpus synth_by_name(const std::string& kind, std::size_t train, std::size_t dev, std::uint64_t seed);

// "word v1 ... v_dim" lines with N(0, 1/dim) entries.
void write_vectors(const std::filesystem::path& path, const std::vector<std::string>& words, std::size_t dim,
                   std::uint64_t seed);

}  // namespace itr
