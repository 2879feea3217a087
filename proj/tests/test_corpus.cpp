#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <sstream>

#include "flexner/corpus.hpp"
#include "flexner/vocab.hpp"
#include "support.hpp"

using namespace flexner;
using flexner::testing::random_iob2;

namespace {

Corpus parse(const std::string& text, ColumnFormat format = {}) {
  std::istringstream in(text);
  return parse_column_corpus(in, format);
}

}  // namespace

TEST(ParseColumnCorpus, TwoLineBlock) {
  const Corpus c = parse("Germany B-LOC\nimported O\n\n");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.sentences[0].size(), 2u);
  EXPECT_EQ(c.sentences[0].tokens[0].surface, "Germany");
  EXPECT_EQ(c.sentences[0].labels[0], "B-LOC");
  EXPECT_EQ(c.sentences[0].labels[1], "O");
}

TEST(ParseColumnCorpus, ThreeBlocks) {
  const Corpus c = parse("a O\n\nb O\nc O\n\n\nd B-PER\n");
  EXPECT_EQ(c.size(), 3u);
}

TEST(ParseColumnCorpus, RaggedRowNamesLine) {
  try {
    parse("Germany\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

TEST(ParseColumnCorpus, EmptyCorpusIsError) {
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("\n\n"), ParseError);
  ColumnFormat f;
  f.allow_empty = true;
  EXPECT_TRUE(parse("", f).empty());
}

TEST(ParseColumnCorpus, InvalidLabelReportsLine) {
  try {
    parse("a O\nb I-PER\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseColumnCorpus, DocstartRecordedAsBoundary) {
  const Corpus c = parse("-DOCSTART- O\n\na O\n\n-DOCSTART- O\n\nb O\n\nc O\n");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.document_starts, (std::vector<std::size_t>{0, 1}));
}

TEST(ParseColumnCorpus, ColumnSelectionAndUnlabeled) {
  ColumnFormat f;
  f.token_column = 1;
  f.label_column = 3;
  const Corpus c = parse("1 Paris NNP B-LOC\n2 is VBZ O\n", f);
  EXPECT_EQ(c.sentences[0].tokens[0].surface, "Paris");
  EXPECT_EQ(c.sentences[0].labels[0], "B-LOC");

  ColumnFormat u;
  u.label_column = std::nullopt;
  const Corpus d = parse("Paris\nis\n", u);
  EXPECT_EQ(d.sentences[0].labels, (std::vector<std::string>{"O", "O"}));
}

TEST(ParseColumnCorpus, Utf8CodePoints) {
  const Corpus c = parse("Zürich B-LOC\n");
  const Token& t = c.sentences[0].tokens[0];
  EXPECT_EQ(t.characters.size(), 6u);
  EXPECT_EQ(t.characters[1], U'ü');
  EXPECT_EQ(encode_utf8(t.characters), "Zürich");
}

TEST(ParseColumnCorpus, WriteThenParseRoundTrip) {
  const Corpus c = flexner::testing::toy_corpus();
  std::ostringstream out;
  write_column_corpus(out, c);
  const Corpus back = parse(out.str());
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(back.sentences[i].labels, c.sentences[i].labels);
    EXPECT_EQ(back.sentences[i].surfaces(), c.sentences[i].surfaces());
  }
}

TEST(ConvertScheme, Examples) {
  using V = std::vector<std::string>;
  EXPECT_EQ(convert_scheme({"B-PER", "I-PER"}, TagScheme::kIob2, TagScheme::kIobes),
            (V{"B-PER", "E-PER"}));
  EXPECT_EQ(convert_scheme({"B-LOC"}, TagScheme::kIob2, TagScheme::kIobes), (V{"S-LOC"}));
  for (auto from : {TagScheme::kIob2, TagScheme::kIobes}) {
    for (auto to : {TagScheme::kIob2, TagScheme::kIobes}) {
      EXPECT_EQ(convert_scheme({"O", "O", "O"}, from, to), (V{"O", "O", "O"}));
    }
  }
  EXPECT_EQ(convert_scheme({"B-ORG", "I-ORG", "E-ORG", "S-LOC"}, TagScheme::kIobes, TagScheme::kIob2),
            (V{"B-ORG", "I-ORG", "I-ORG", "B-LOC"}));
}

TEST(ConvertScheme, InvalidInputNamesPosition) {
  try {
    convert_scheme({"O", "I-LOC"}, TagScheme::kIob2, TagScheme::kIobes);
    FAIL();
  } catch (const LabelError& e) {
    EXPECT_EQ(e.position(), 1u);
  }
  EXPECT_THROW(convert_scheme({"B-LOC", "I-PER"}, TagScheme::kIob2, TagScheme::kIobes), LabelError);
  EXPECT_THROW(convert_scheme({"B-LOC", "O"}, TagScheme::kIobes, TagScheme::kIob2), LabelError);
  EXPECT_THROW(convert_scheme({"X-LOC"}, TagScheme::kIob2, TagScheme::kIobes), LabelError);
}

TEST(ConvertScheme, RoundTripProperty) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len(0, 12);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto x = random_iob2(rng, len(rng));
    const auto y = convert_scheme(x, TagScheme::kIob2, TagScheme::kIobes);
    ASSERT_TRUE(is_valid_sequence(y, TagScheme::kIobes));
    ASSERT_EQ(convert_scheme(y, TagScheme::kIobes, TagScheme::kIob2), x);
    ASSERT_EQ(extract_spans(x, TagScheme::kIob2).mentions,
              extract_spans(y, TagScheme::kIobes).mentions);
  }
}

TEST(ExtractEntities, PaperSentence) {
  const Sentence s = make_sentence({"Germany", "imported", "47000", "sheep", "from", "Britain"},
                                   {"S-LOC", "O", "O", "O", "O", "S-LOC"}, TagScheme::kIobes);
  const auto m = extract_entities(s);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].entity_class, "LOC");
  EXPECT_EQ(m[0].start, 0u);
  EXPECT_EQ(m[0].end, 1u);
  EXPECT_EQ(m[0].surface, (std::vector<std::string>{"Germany"}));
  EXPECT_EQ(m[1].start, 5u);
  EXPECT_EQ(m[1].end, 6u);
  EXPECT_EQ(m[1].surface, (std::vector<std::string>{"Britain"}));
}

TEST(ExtractEntities, SimpleCases) {
  EXPECT_TRUE(extract_entities(make_sentence({"a", "b"}, {"O", "O"}, TagScheme::kIob2)).empty());
  const auto m = extract_entities(
      make_sentence({"a", "b", "c"}, {"B-ORG", "I-ORG", "E-ORG"}, TagScheme::kIobes));
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].entity_class, "ORG");
  EXPECT_EQ(m[0].start, 0u);
  EXPECT_EQ(m[0].end, 3u);
}

TEST(ExtractEntities, StrictRejectsLenientRepairs) {
  const std::vector<std::string> labels = {"O", "I-PER", "I-PER", "O", "B-LOC", "I-ORG"};
  EXPECT_THROW(extract_spans(labels, TagScheme::kIob2, Repair::kStrict), LabelError);
  const auto r = extract_spans(labels, TagScheme::kIob2, Repair::kLenient);
  EXPECT_TRUE(r.repaired);
  ASSERT_EQ(r.mentions.size(), 3u);
  EXPECT_EQ(r.mentions[0].entity_class, "PER");
  EXPECT_EQ(r.mentions[0].start, 1u);
  EXPECT_EQ(r.mentions[0].end, 3u);
  EXPECT_EQ(r.mentions[1].entity_class, "LOC");
  EXPECT_EQ(r.mentions[1].end, 5u);
  EXPECT_EQ(r.mentions[2].entity_class, "ORG");
  EXPECT_EQ(r.mentions[2].start, 5u);

  const auto t = extract_spans({"B-PER", "I-PER", "O", "E-LOC"}, TagScheme::kIobes, Repair::kLenient);
  EXPECT_TRUE(t.repaired);
  ASSERT_EQ(t.mentions.size(), 2u);
  EXPECT_EQ(t.mentions[0].end, 2u);
  EXPECT_EQ(t.mentions[1].start, 3u);
  EXPECT_EQ(t.mentions[1].end, 4u);
}

TEST(ExtractEntities, WriteLabelsInverseProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const Sentence s = flexner::testing::random_sentence(rng, 1 + trial % 10);
    for (auto scheme : {TagScheme::kIob2, TagScheme::kIobes}) {
      const Sentence c = convert_sentence(s, scheme);
      const auto m = extract_entities(c);
      ASSERT_EQ(write_labels(m, c.size(), scheme), c.labels);
      for (const auto& mention : m) {
        ASSERT_LT(mention.start, mention.end);
        ASSERT_LE(mention.end, c.size());
      }
    }
  }
}

namespace {

// Independent mention count: a regex pass over the space-joined IOB2 labels.
std::map<std::pair<std::string, std::string>, std::size_t> regex_mentions(const Corpus& corpus) {
  std::map<std::pair<std::string, std::string>, std::size_t> out;
  const std::regex mention(R"(B-(\w+)((?: I-\1)*))");
  for (const auto& s : corpus.sentences) {
    std::string joined;
    std::vector<std::size_t> offsets;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) joined += ' ';
      offsets.push_back(joined.size());
      joined += s.labels[i];
    }
    for (auto it = std::sregex_iterator(joined.begin(), joined.end(), mention);
         it != std::sregex_iterator(); ++it) {
      const auto pos = static_cast<std::size_t>(it->position());
      const auto first = static_cast<std::size_t>(
          std::find(offsets.begin(), offsets.end(), pos) - offsets.begin());
      const std::string tail = (*it)[2].str();
      const std::size_t len = 1 + static_cast<std::size_t>(std::count(tail.begin(), tail.end(), ' '));
      std::string surface;
      for (std::size_t k = first; k < first + len; ++k) {
        if (k > first) surface += ' ';
        surface += s.tokens[k].surface;
      }
      ++out[{(*it)[1].str(), surface}];
    }
  }
  return out;
}

}  // namespace

TEST(EntityGlossary, CountingExample) {
  Corpus c;
  c.sentences.push_back(make_sentence({"Germany", "and", "Britain"}, {"B-LOC", "O", "B-LOC"},
                                      TagScheme::kIob2));
  c.sentences.push_back(make_sentence({"Germany"}, {"B-LOC"}, TagScheme::kIob2));
  const EntityGlossary g = build_entity_glossary(c);
  EXPECT_EQ(g.classes(), (std::vector<std::string>{"LOC"}));
  const auto& e = g.entries("LOC");
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].surface, (std::vector<std::string>{"Germany"}));
  EXPECT_EQ(e[0].frequency, 2u);
  EXPECT_EQ(e[1].surface, (std::vector<std::string>{"Britain"}));
  EXPECT_EQ(e[1].frequency, 1u);
  EXPECT_EQ(g.total_frequency("LOC"), 3u);
}

TEST(EntityGlossary, NoEntities) {
  Corpus c;
  c.sentences.push_back(make_sentence({"a"}, {"O"}, TagScheme::kIob2));
  EXPECT_EQ(build_entity_glossary(c).class_count(), 0u);
  EXPECT_EQ(build_entity_glossary(Corpus{}).class_count(), 0u);
}

TEST(EntityGlossary, MatchesRegexEnumeration) {
  std::mt19937_64 rng(3);
  Corpus c;
  for (int i = 0; i < 10; ++i) c.sentences.push_back(flexner::testing::random_sentence(rng, 8));
  const auto expected = regex_mentions(c);
  const EntityGlossary g = build_entity_glossary(c);
  std::map<std::pair<std::string, std::string>, std::size_t> got;
  for (const auto& cls : g.classes()) {
    std::size_t sum = 0;
    for (const auto& e : g.entries(cls)) {
      std::string surface;
      for (std::size_t k = 0; k < e.surface.size(); ++k) surface += (k ? " " : "") + e.surface[k];
      got[{cls, surface}] = e.frequency;
      EXPECT_GE(e.frequency, 1u);
      sum += e.frequency;
    }
    EXPECT_EQ(sum, g.total_frequency(cls));
  }
  EXPECT_EQ(got, expected);
}

TEST(CategoricalSentenceSets, PaperMembership) {
  Corpus c;
  c.sentences.push_back(make_sentence({"John", "in", "Paris"}, {"B-PER", "O", "B-LOC"},
                                      TagScheme::kIob2));
  c.sentences.push_back(make_sentence({"nothing"}, {"O"}, TagScheme::kIob2));
  const auto sets = build_categorical_sentence_sets(c);
  EXPECT_EQ(sets.of("LOC"), (std::vector<std::size_t>{0}));
  EXPECT_EQ(sets.of("PER"), (std::vector<std::size_t>{0}));
  EXPECT_TRUE(sets.of("ORG").empty());
}

TEST(CategoricalSentenceSets, BruteForceProperty) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    Corpus c;
    for (int i = 0; i < 12; ++i) c.sentences.push_back(flexner::testing::random_sentence(rng, 5));
    const auto sets = build_categorical_sentence_sets(c);
    for (const auto& cls : flexner::testing::kClasses) {
      std::vector<std::size_t> brute;
      for (std::size_t i = 0; i < c.size(); ++i) {
        for (const auto& l : c.sentences[i].labels) {
          if (l == "B-" + cls) {
            brute.push_back(i);
            break;
          }
        }
      }
      ASSERT_EQ(sets.of(cls), brute);
    }
  }
}

TEST(Vocabulary, MinFrequencyAndUnknown) {
  Corpus c;
  c.sentences.push_back(make_sentence({"a", "b", "a"}, {"O", "O", "O"}, TagScheme::kIob2));
  const Vocabularies v1 = build_vocab(c, 1);
  EXPECT_NE(v1.words.find("a"), -1);
  EXPECT_NE(v1.words.find("b"), -1);
  EXPECT_NE(v1.words.find("a"), v1.words.find("b"));
  const Vocabularies v2 = build_vocab(c, 2);
  EXPECT_EQ(v2.words.lookup("b"), Vocabulary::kUnknown);
  EXPECT_NE(v2.words.lookup("a"), Vocabulary::kUnknown);
  EXPECT_THROW(build_vocab(c, 0), Error);
}

TEST(Vocabulary, CaseFallback) {
  Vocabulary v;
  const int paris = v.add("paris");
  EXPECT_EQ(v.lookup("Paris"), paris);
  EXPECT_EQ(v.lookup_exact("Paris"), Vocabulary::kUnknown);
  const int upper = v.add("Paris");
  EXPECT_EQ(v.lookup("Paris"), upper);
  EXPECT_EQ(v.lookup("London"), Vocabulary::kUnknown);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  const Vocabularies v = build_vocab(flexner::testing::toy_corpus());
  std::stringstream buf;
  v.words.save(buf);
  const Vocabulary back = Vocabulary::load(buf);
  EXPECT_EQ(back, v.words);
  for (const auto& t : v.words.tokens()) EXPECT_EQ(back.find(t), v.words.find(t));
  EXPECT_EQ(back.lookup("never-seen"), Vocabulary::kUnknown);
}

TEST(Vocabulary, EncodeFillsIds) {
  Corpus c = flexner::testing::toy_corpus();
  const Vocabularies v = build_vocab(c);
  encode_corpus(c, v);
  for (const auto& s : c.sentences) {
    for (const auto& t : s.tokens) {
      EXPECT_EQ(v.words.token(t.word_id), t.surface);
      ASSERT_EQ(t.char_ids.size(), t.characters.size());
      for (std::size_t k = 0; k < t.characters.size(); ++k) {
        EXPECT_EQ(v.chars.token(t.char_ids[k]), encode_utf8({t.characters[k]}));
      }
    }
  }
}
