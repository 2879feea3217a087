#include "flexner/augment.hpp"

#include <algorithm>

namespace flexner {

std::string_view augment_mode_name(AugmentMode mode) {
  switch (mode) {
    case AugmentMode::kOff:
      return "off";
    case AugmentMode::kSca:
      return "sca";
    case AugmentMode::kEca:
      return "eca";
  }
  return "off";
}

AugmentMode parse_augment_mode(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "off" || lower == "none") return AugmentMode::kOff;
  if (lower == "sca") return AugmentMode::kSca;
  if (lower == "eca") return AugmentMode::kEca;
  throw Error("unknown augmentation mode '" + std::string(name) + "'");
}

void AugmentConfig::validate() const {
  if (!(bernoulli_p >= 0.0 && bernoulli_p <= 1.0)) {
    throw Error("bernoulli_p must lie in [0, 1]");
  }
}

Sentence crossover(const Sentence& sentence, const EntityMention& slot,
                   const std::vector<std::string>& replacement) {
  if (slot.start >= slot.end || slot.end > sentence.size()) {
    throw Error("crossover slot [" + std::to_string(slot.start) + ", " + std::to_string(slot.end) +
                ") is outside a sentence of length " + std::to_string(sentence.size()));
  }
  if (replacement.empty()) throw Error("crossover replacement must be non-empty");

  Sentence out;
  out.scheme = sentence.scheme;
  const std::size_t length = sentence.size() - slot.length() + replacement.size();
  out.tokens.reserve(length);
  out.labels.reserve(length);
  for (std::size_t i = 0; i < slot.start; ++i) {
    out.tokens.push_back(sentence.tokens[i]);
    out.labels.push_back(sentence.labels[i]);
  }
  EntityMention placed{slot.entity_class, 0, replacement.size(), {}};
  const auto slot_labels = write_labels({placed}, replacement.size(), sentence.scheme);
  for (std::size_t k = 0; k < replacement.size(); ++k) {
    const bool same = k < slot.length() && sentence.tokens[slot.start + k].surface == replacement[k];
    out.tokens.push_back(same ? sentence.tokens[slot.start + k] : make_token(replacement[k]));
    out.labels.push_back(slot_labels[k]);
  }
  for (std::size_t i = slot.end; i < sentence.size(); ++i) {
    out.tokens.push_back(sentence.tokens[i]);
    out.labels.push_back(sentence.labels[i]);
  }
  return out;
}

namespace {

Sentence as_iobes(const Sentence& sentence) {
  return sentence.scheme == TagScheme::kIobes ? sentence
                                              : convert_sentence(sentence, TagScheme::kIobes);
}

// Applies replacements (ordered by start, non-overlapping) right to left so
// earlier spans keep their coordinates.
Sentence apply_replacements(Sentence sentence, const std::vector<Replacement>& replacements) {
  for (auto it = replacements.rbegin(); it != replacements.rend(); ++it) {
    EntityMention slot{it->entity_class, it->start, it->end, it->original};
    sentence = crossover(sentence, slot, it->replacement);
  }
  return sentence;
}

}  // namespace

AugmentedSentence sca_augment(const Sentence& sentence, const EntityGlossary& glossary,
                              const AugmentConfig& config, Rng& rng, std::size_t source_index) {
  config.validate();
  AugmentedSentence out;
  out.provenance.source_index = source_index;
  const Sentence source = as_iobes(sentence);
  std::bernoulli_distribution light(config.bernoulli_p);

  for (const auto& slot : extract_entities(source)) {
    if (!light(rng)) continue;
    const auto& entries = glossary.entries(slot.entity_class);
    std::vector<const GlossaryEntry*> candidates;
    for (const auto& e : entries) {
      if (e.surface != slot.surface) candidates.push_back(&e);
    }
    if (candidates.empty()) continue;
    const GlossaryEntry* pick = nullptr;
    if (config.frequency_weighted) {
      std::vector<double> weights;
      weights.reserve(candidates.size());
      for (const auto* c : candidates) weights.push_back(static_cast<double>(c->frequency));
      std::discrete_distribution<std::size_t> draw(weights.begin(), weights.end());
      pick = candidates[draw(rng)];
    } else {
      std::uniform_int_distribution<std::size_t> draw(0, candidates.size() - 1);
      pick = candidates[draw(rng)];
    }
    out.provenance.replacements.push_back(
        Replacement{slot.start, slot.end, slot.surface, pick->surface, slot.entity_class});
  }
  out.sentence = apply_replacements(source, out.provenance.replacements);
  return out;
}

const GlossaryEntry& sample_entity(const std::string& entity_class, const EntityGlossary& glossary,
                                   Rng& rng) {
  const auto& entries = glossary.entries(entity_class);
  if (entries.empty()) throw Error("glossary has no entries of class '" + entity_class + "'");
  std::vector<double> weights;
  weights.reserve(entries.size());
  for (const auto& e : entries) weights.push_back(static_cast<double>(e.frequency));
  std::discrete_distribution<std::size_t> draw(weights.begin(), weights.end());
  return entries[draw(rng)];
}

AugmentedSentence eca_augment(const std::string& target_class, const EntityGlossary& glossary,
                              const CategoricalSentenceSets& sets, const Corpus& corpus, Rng& rng) {
  const auto& hosts = sets.of(target_class);
  if (hosts.empty()) throw Error("no sentence contains an entity of class '" + target_class + "'");
  if (!glossary.has_class(target_class)) {
    throw Error("glossary has no entries of class '" + target_class + "'");
  }

  const GlossaryEntry* entity = &sample_entity(target_class, glossary, rng);
  std::uniform_int_distribution<std::size_t> pick_host(0, hosts.size() - 1);
  const std::size_t host_index = hosts[pick_host(rng)];
  const Sentence host = as_iobes(corpus.sentences.at(host_index));

  std::vector<EntityMention> slots;
  for (auto& m : extract_entities(host)) {
    if (m.entity_class == target_class) slots.push_back(std::move(m));
  }
  std::uniform_int_distribution<std::size_t> pick_slot(0, slots.size() - 1);
  const EntityMention& slot = slots[pick_slot(rng)];

  AugmentedSentence out;
  out.provenance.source_index = host_index;
  for (int attempt = 0; entity->surface == slot.surface; ++attempt) {
    if (attempt == kEcaMaxResamples) {
      out.sentence = host;
      return out;
    }
    entity = &sample_entity(target_class, glossary, rng);
  }
  out.provenance.replacements.push_back(
      Replacement{slot.start, slot.end, slot.surface, entity->surface, target_class});
  out.sentence = apply_replacements(host, out.provenance.replacements);
  return out;
}

AugmentationSource::AugmentationSource(const Corpus& corpus)
    : corpus_(corpus.scheme == TagScheme::kIobes ? corpus : convert_corpus(corpus, TagScheme::kIobes)),
      glossary_(build_entity_glossary(corpus_)),
      sets_(build_categorical_sentence_sets(corpus_)) {}

std::vector<AugmentedSentence> AugmentationSource::stream(const AugmentConfig& config,
                                                          std::size_t epoch) const {
  config.validate();
  std::vector<AugmentedSentence> out;
  if (config.mode == AugmentMode::kOff || corpus_.empty()) return out;
  const std::size_t count = config.max_per_epoch.value_or(corpus_.size());
  out.reserve(count);

  std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu),
                    static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(config.mode)};
  Rng rng(seq);

  if (config.mode == AugmentMode::kSca) {
    std::uniform_int_distribution<std::size_t> pick(0, corpus_.size() - 1);
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t idx = pick(rng);
      out.push_back(sca_augment(corpus_.sentences[idx], glossary_, config, rng, idx));
    }
    return out;
  }

  std::vector<std::string> classes;
  for (const auto& cls : glossary_.classes()) {
    if (!sets_.of(cls).empty()) classes.push_back(cls);
  }
  if (classes.empty()) return out;
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(eca_augment(classes[k % classes.size()], glossary_, sets_, corpus_, rng));
  }
  return out;
}

std::vector<AugmentedSentence> augmentation_stream(const Corpus& corpus, const AugmentConfig& config,
                                                   std::size_t epoch) {
  return AugmentationSource(corpus).stream(config, epoch);
}

}  // namespace flexner
