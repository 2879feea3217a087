#include "flexner/synthetic.hpp"

#include <array>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>

namespace flexner {

namespace {

using Surface = std::vector<std::string>;

struct Pools {
  std::vector<Surface> seen;
  std::vector<Surface> held_out;
};

constexpr std::array kOnsets = {"b", "d", "k", "l", "m", "n", "r", "s", "t", "v", "z", "gr", "br", "st"};
constexpr std::array kVowels = {"a", "e", "i", "o", "u", "ai", "ou"};

std::string syllables(std::mt19937_64& rng, int count) {
  std::uniform_int_distribution<std::size_t> onset(0, kOnsets.size() - 1);
  std::uniform_int_distribution<std::size_t> vowel(0, kVowels.size() - 1);
  std::string out;
  for (int i = 0; i < count; ++i) {
    out += kOnsets[onset(rng)];
    out += kVowels[vowel(rng)];
  }
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

Pools make_pool(std::mt19937_64& rng, const std::string& cls, std::size_t size) {
  std::set<Surface> unique;
  std::vector<Surface> all;
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> length(2, 3);
  constexpr std::array kLocSuffix = {"ia", "burg", "ville", "stad", "port"};
  constexpr std::array kOrgSuffix = {"Corp", "Group", "Bank", "Institute", "Holdings"};
  std::uniform_int_distribution<std::size_t> pick5(0, 4);
  while (all.size() < size) {
    Surface s;
    if (cls == "PER") {
      s.push_back(syllables(rng, length(rng)));
      if (coin(rng)) s.push_back(syllables(rng, length(rng)) + "son");
    } else if (cls == "LOC") {
      s.push_back(syllables(rng, length(rng)) + kLocSuffix[pick5(rng)]);
      if (coin(rng) && coin(rng)) s.insert(s.begin(), "New");
    } else {
      s.push_back(syllables(rng, length(rng)));
      if (coin(rng)) s.push_back(syllables(rng, 2));
      s.push_back(kOrgSuffix[pick5(rng)]);
    }
    if (unique.insert(s).second) all.push_back(std::move(s));
  }
  Pools pools;
  const std::size_t cut = size * 3 / 4;
  pools.seen.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cut));
  pools.held_out.assign(all.begin() + static_cast<std::ptrdiff_t>(cut), all.end());
  return pools;
}

constexpr std::array kTemplates = {
    "{PER} visited {LOC} last week .",
    "{PER} works for {ORG} .",
    "{ORG} opened an office in {LOC} .",
    "The mayor of {LOC} met {PER} on Monday .",
    "{PER} said the deal with {ORG} was final .",
    "Shares of {ORG} fell sharply on Tuesday .",
    "{LOC} imported 47000 sheep from {LOC} .",
    "{PER} was born in {LOC} .",
    "Analysts at {ORG} expect strong growth .",
    "It rained all day in the hills .",
    "{PER} and {PER} signed the treaty in {LOC} .",
    "{ORG} hired {PER} as chief executive .",
    "Flights to {LOC} were cancelled .",
    "The weather was mild this spring .",
    "According to {PER} , {ORG} will expand into {LOC} .",
    "Police in {LOC} questioned {PER} .",
};

Sentence instantiate(const std::string& pattern, std::mt19937_64& rng,
                     const std::map<std::string, Pools>& pools, double overlap) {
  std::istringstream words(pattern);
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
  std::bernoulli_distribution from_seen(overlap);
  std::string w;
  while (words >> w) {
    if (w.size() > 2 && w.front() == '{' && w.back() == '}') {
      const std::string cls = w.substr(1, w.size() - 2);
      const Pools& p = pools.at(cls);
      const auto& pool = (p.held_out.empty() || from_seen(rng)) ? p.seen : p.held_out;
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      const Surface& s = pool[pick(rng)];
      for (std::size_t i = 0; i < s.size(); ++i) {
        tokens.push_back(s[i]);
        labels.push_back(format_tag(i == 0 ? 'B' : 'I', cls));
      }
    } else {
      tokens.push_back(w);
      labels.push_back("O");
    }
  }
  return make_sentence(tokens, std::move(labels), TagScheme::kIob2);
}

Corpus make_split(std::size_t count, std::mt19937_64& rng, const std::map<std::string, Pools>& pools,
                  double overlap) {
  Corpus c;
  c.scheme = TagScheme::kIob2;
  std::uniform_int_distribution<std::size_t> pick(0, kTemplates.size() - 1);
  for (std::size_t i = 0; i < count; ++i) {
    c.sentences.push_back(instantiate(kTemplates[pick(rng)], rng, pools, overlap));
  }
  return c;
}

}  // namespace

SyntheticCorpus make_synthetic(const SyntheticOptions& options) {
  if (!(options.overlap >= 0.0 && options.overlap <= 1.0)) {
    throw Error("overlap must lie in [0, 1]");
  }
  std::mt19937_64 rng(options.seed);
  std::map<std::string, Pools> pools;
  for (const std::string cls : {"PER", "LOC", "ORG"}) pools[cls] = make_pool(rng, cls, 80);
  SyntheticCorpus out;
  out.train = make_split(options.train, rng, pools, 1.0);
  out.dev = make_split(options.dev, rng, pools, options.overlap);
  out.test = make_split(options.test, rng, pools, options.overlap);
  return out;
}

void write_synthetic(const std::string& directory, const SyntheticCorpus& corpus) {
  std::filesystem::create_directories(directory);
  const std::filesystem::path dir(directory);
  write_column_corpus((dir / "train.txt").string(), corpus.train);
  write_column_corpus((dir / "dev.txt").string(), corpus.dev);
  write_column_corpus((dir / "test.txt").string(), corpus.test);
}

}  // namespace flexner
