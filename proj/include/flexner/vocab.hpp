#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "flexner/corpus.hpp"

namespace flexner {

// Token <-> index map with two reserved rows: padding (0) and unknown (1).
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnknown = 1;

  Vocabulary();

  int add(const std::string& token);
  // Exact entry or -1.
  int find(const std::string& token) const;
  // Exact match, then lowercased match, then the unknown index.
  int lookup(const std::string& token) const;
  int lookup_exact(const std::string& token) const;

  const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

std::string ascii_lower(std::string text);

struct Vocabularies {
  Vocabulary words;
  Vocabulary chars;  // single code points, UTF-8 encoded
};

Vocabularies build_vocab(const Corpus& corpus, std::size_t min_frequency = 1);

void encode_sentence(Sentence& sentence, const Vocabularies& vocab);
void encode_corpus(Corpus& corpus, const Vocabularies& vocab);

}  // namespace flexner
