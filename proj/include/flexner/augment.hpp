#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "flexner/corpus.hpp"

namespace flexner {

using Rng = std::mt19937_64;

enum class AugmentMode { kOff, kSca, kEca };

std::string_view augment_mode_name(AugmentMode mode);
AugmentMode parse_augment_mode(std::string_view name);

struct AugmentConfig {
  AugmentMode mode = AugmentMode::kSca;
  double bernoulli_p = 0.7;
  std::uint64_t seed = 1;
  // nullopt: one corpus' worth of samples per epoch.
  std::optional<std::size_t> max_per_epoch;
  // Draw SCA replacements proportionally to glossary frequency instead of uniformly.
  bool frequency_weighted = false;

  void validate() const;
};

struct Replacement {
  std::size_t start = 0;  // slot span in the source sentence
  std::size_t end = 0;
  std::vector<std::string> original;
  std::vector<std::string> replacement;
  std::string entity_class;
};

struct Provenance {
  std::size_t source_index = 0;
  std::vector<Replacement> replacements;
};

struct AugmentedSentence {
  Sentence sentence;  // always IOBES
  Provenance provenance;
};

// Splices `replacement` into the span of `slot` and relabels it in the
// sentence's scheme. Tokens outside the slot keep their encoding.
Sentence crossover(const Sentence& sentence, const EntityMention& slot,
                   const std::vector<std::string>& replacement);

// Sentence-centric: every entity slot is lit with probability p and a lit
// slot takes a different surface of the same class from the glossary.
AugmentedSentence sca_augment(const Sentence& sentence, const EntityGlossary& glossary,
                              const AugmentConfig& config, Rng& rng,
                              std::size_t source_index = 0);

// Frequency-proportional draw F(e) / F(E_class).
const GlossaryEntry& sample_entity(const std::string& entity_class, const EntityGlossary& glossary,
                                   Rng& rng);

// Entity-centric: sample an entity of `target_class`, a host sentence from
// that class' sentence set, and one of the host's slots of that class.
AugmentedSentence eca_augment(const std::string& target_class, const EntityGlossary& glossary,
                              const CategoricalSentenceSets& sets, const Corpus& corpus, Rng& rng);

inline constexpr int kEcaMaxResamples = 8;

class AugmentationSource {
 public:
  explicit AugmentationSource(const Corpus& corpus);

  // Pure function of (corpus, config, epoch).
  std::vector<AugmentedSentence> stream(const AugmentConfig& config, std::size_t epoch) const;

  const Corpus& corpus() const { return corpus_; }
  const EntityGlossary& glossary() const { return glossary_; }
  const CategoricalSentenceSets& sets() const { return sets_; }

 private:
  Corpus corpus_;  // IOBES copy
  EntityGlossary glossary_;
  CategoricalSentenceSets sets_;
};

std::vector<AugmentedSentence> augmentation_stream(const Corpus& corpus, const AugmentConfig& config,
                                                   std::size_t epoch);

}  // namespace flexner
