#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "flexner/params.hpp"
#include "flexner/vocab.hpp"

namespace flexner {

// Text table, one "token v1 v2 ... vd" row per line. A leading "count dim"
// header line (word2vec text format) is skipped.
struct PretrainedEmbeddings {
  int dim = 0;
  std::vector<std::string> tokens;
  Mat vectors;

  int find(const std::string& token) const;

 private:
  friend PretrainedEmbeddings read_embeddings(std::istream& in);
  std::unordered_map<std::string, int> index_;
};

PretrainedEmbeddings read_embeddings(std::istream& in);
PretrainedEmbeddings read_embeddings(const std::string& path);

void extend_vocabulary(Vocabulary& vocab, const PretrainedEmbeddings& embeddings);

// Copies pretrained rows into `table` for every vocabulary entry found exactly
// or lowercased. Returns the number of rows copied.
std::size_t load_pretrained(ParameterStore& store, std::size_t table, const Vocabulary& vocab,
                            const PretrainedEmbeddings& embeddings);

}  // namespace flexner
