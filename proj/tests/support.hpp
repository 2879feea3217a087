#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "flexner/corpus.hpp"

namespace flexner::testing {

inline const std::vector<std::string> kClasses = {"PER", "LOC", "ORG"};

// Random well-formed IOB2 sequence of the given length.
inline std::vector<std::string> random_iob2(std::mt19937_64& rng, std::size_t n,
                                            const std::vector<std::string>& classes = kClasses) {
  std::vector<std::string> out;
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_int_distribution<std::size_t> cls(0, classes.size() - 1);
  std::string open;
  for (std::size_t i = 0; i < n; ++i) {
    const int k = kind(rng);
    if (k == 0) {
      out.push_back("O");
      open.clear();
    } else if (k == 1 || open.empty()) {
      open = classes[cls(rng)];
      out.push_back("B-" + open);
    } else {
      out.push_back("I-" + open);
    }
  }
  return out;
}

inline Sentence random_sentence(std::mt19937_64& rng, std::size_t n) {
  static const std::vector<std::string> words = {"the", "Paris", "John", "visited", "Acme",
                                                 "of",  "New",   "York", "said",    "."};
  std::uniform_int_distribution<std::size_t> w(0, words.size() - 1);
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < n; ++i) tokens.push_back(words[w(rng)]);
  return make_sentence(tokens, random_iob2(rng, n), TagScheme::kIob2);
}

inline Corpus toy_corpus() {
  Corpus c;
  c.sentences.push_back(make_sentence({"John", "lives", "in", "New", "York", "."},
                                      {"B-PER", "O", "O", "B-LOC", "I-LOC", "O"}, TagScheme::kIob2));
  c.sentences.push_back(make_sentence({"Mary", "works", "for", "Acme", "in", "Paris"},
                                      {"B-PER", "O", "O", "B-ORG", "O", "B-LOC"}, TagScheme::kIob2));
  c.sentences.push_back(make_sentence({"Paris", "is", "big"}, {"B-LOC", "O", "O"}, TagScheme::kIob2));
  c.sentences.push_back(make_sentence({"Bob", "Smith", "met", "Mary", "in", "Paris"},
                                      {"B-PER", "I-PER", "O", "B-PER", "O", "B-LOC"},
                                      TagScheme::kIob2));
  c.sentences.push_back(make_sentence({"nothing", "here"}, {"O", "O"}, TagScheme::kIob2));
  return c;
}

// Fresh, empty scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("flexner_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline bool close_rel(double a, double b, double rel, double abs = 1e-8) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs;
}

}  // namespace flexner::testing
