#include "flexner/vocab.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace flexner {

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int idx = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, idx);
  return idx;
}

int Vocabulary::find(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

int Vocabulary::lookup_exact(const std::string& token) const {
  const int idx = find(token);
  return idx < 0 ? kUnknown : idx;
}

int Vocabulary::lookup(const std::string& token) const {
  if (int idx = find(token); idx >= 0) return idx;
  if (int idx = find(ascii_lower(token)); idx >= 0) return idx;
  return kUnknown;
}

void Vocabulary::save(std::ostream& out) const {
  out << tokens_.size() << '\n';
  for (std::size_t i = 2; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::size_t count = 0;
  if (!(in >> count) || count < 2) throw Error("malformed vocabulary header");
  std::string line;
  std::getline(in, line);
  Vocabulary vocab;
  for (std::size_t i = 2; i < count; ++i) {
    if (!std::getline(in, line)) throw Error("vocabulary truncated");
    if (vocab.add(line) != static_cast<int>(i)) throw Error("duplicate vocabulary entry '" + line + "'");
  }
  return vocab;
}

std::string ascii_lower(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) {
    return c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
  });
  return text;
}

Vocabularies build_vocab(const Corpus& corpus, std::size_t min_frequency) {
  if (min_frequency < 1) throw Error("min_frequency must be at least 1");
  std::unordered_map<std::string, std::size_t> counts;
  std::vector<std::string> order;
  Vocabularies out;
  for (const auto& s : corpus.sentences) {
    for (const auto& t : s.tokens) {
      if (counts[t.surface]++ == 0) order.push_back(t.surface);
      for (char32_t c : t.characters) out.chars.add(encode_utf8({c}));
    }
  }
  for (const auto& w : order) {
    if (counts[w] >= min_frequency) out.words.add(w);
  }
  return out;
}

void encode_sentence(Sentence& sentence, const Vocabularies& vocab) {
  for (auto& t : sentence.tokens) {
    t.word_id = vocab.words.lookup(t.surface);
    t.char_ids.clear();
    t.char_ids.reserve(t.characters.size());
    for (char32_t c : t.characters) t.char_ids.push_back(vocab.chars.lookup_exact(encode_utf8({c})));
  }
}

void encode_corpus(Corpus& corpus, const Vocabularies& vocab) {
  for (auto& s : corpus.sentences) encode_sentence(s, vocab);
}

}  // namespace flexner
