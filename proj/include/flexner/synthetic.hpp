#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "flexner/corpus.hpp"

namespace flexner {

// Templated sentences over PER, LOC and ORG slots. Each class has a pool of
// surfaces split into a training part and a held-out part; dev and test
// slots draw from the training part with probability `overlap`.
struct SyntheticOptions {
  std::size_t train = 500;
  std::size_t dev = 100;
  std::size_t test = 100;
  std::uint64_t seed = 7;
  double overlap = 0.8;
};

struct SyntheticCorpus {
  Corpus train;
  Corpus dev;
  Corpus test;
};

SyntheticCorpus make_synthetic(const SyntheticOptions& options);
// Writes train.txt, dev.txt and test.txt (IOB2 columns) into `directory`.
void write_synthetic(const std::string& directory, const SyntheticCorpus& corpus);

}  // namespace flexner
