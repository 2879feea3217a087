#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flexner/error.hpp"

namespace flexner {

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

// Raised for label sequences that are not well formed under their scheme.
class LabelError : public Error {
 public:
  LabelError(std::size_t position, const std::string& what);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

enum class TagScheme { kIob2, kIobes };

std::string_view scheme_name(TagScheme scheme);
TagScheme parse_scheme(std::string_view name);

struct Token {
  std::string surface;
  std::vector<char32_t> characters;
  int word_id = -1;
  std::vector<int> char_ids;
};

Token make_token(std::string surface);
std::vector<char32_t> decode_utf8(std::string_view text);
std::string encode_utf8(const std::vector<char32_t>& code_points);

struct Sentence {
  std::vector<Token> tokens;
  std::vector<std::string> labels;
  TagScheme scheme = TagScheme::kIob2;

  std::size_t size() const { return tokens.size(); }
  std::vector<std::string> surfaces() const;
};

Sentence make_sentence(const std::vector<std::string>& words, std::vector<std::string> labels,
                       TagScheme scheme);

struct Corpus {
  std::vector<Sentence> sentences;
  // Sentence indices at which a -DOCSTART- marker opened a new document.
  std::vector<std::size_t> document_starts;
  TagScheme scheme = TagScheme::kIob2;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
};

struct ColumnFormat {
  std::size_t token_column = 0;
  // nullopt: unlabeled input, every token receives "O".
  std::optional<std::size_t> label_column = 1;
  TagScheme scheme = TagScheme::kIob2;
  bool allow_empty = false;
  // Off for predicted label files, which are repaired at scoring time.
  bool validate = true;
};

Corpus parse_column_corpus(std::istream& in, const ColumnFormat& format);
Corpus read_column_corpus(const std::string& path, const ColumnFormat& format);
// Two columns per line: surface and label.
void write_column_corpus(std::ostream& out, const Corpus& corpus);
void write_column_corpus(const std::string& path, const Corpus& corpus);

// --- tags ---------------------------------------------------------------

struct Tag {
  char prefix = 'O';  // one of O B I E S
  std::string entity_class;
};

Tag parse_tag(std::string_view label);
std::string format_tag(char prefix, std::string_view entity_class);

// Position of the first tag that breaks the scheme, or nullopt for a valid sequence.
std::optional<std::size_t> first_invalid_position(const std::vector<std::string>& labels,
                                                  TagScheme scheme);
bool is_valid_sequence(const std::vector<std::string>& labels, TagScheme scheme);
void validate_labels(const std::vector<std::string>& labels, TagScheme scheme);

std::vector<std::string> convert_scheme(const std::vector<std::string>& labels, TagScheme from,
                                        TagScheme to);
Sentence convert_sentence(const Sentence& sentence, TagScheme to);
Corpus convert_corpus(const Corpus& corpus, TagScheme to);

// --- mentions -----------------------------------------------------------

struct EntityMention {
  std::string entity_class;
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  std::vector<std::string> surface;

  std::size_t length() const { return end - start; }
  bool operator==(const EntityMention&) const = default;
};

enum class Repair { kStrict, kLenient };

struct SpanExtraction {
  std::vector<EntityMention> mentions;  // surfaces left empty
  bool repaired = false;
};

// Strict mode throws LabelError on malformed input. Lenient mode opens a new
// span at an orphan I-/E- tag and truncates spans left open by B-/I- tags.
SpanExtraction extract_spans(const std::vector<std::string>& labels, TagScheme scheme,
                             Repair repair = Repair::kStrict);

std::vector<EntityMention> extract_entities(const Sentence& sentence,
                                            Repair repair = Repair::kStrict);

// Inverse of extract_spans for non-overlapping mentions ordered by start.
std::vector<std::string> write_labels(const std::vector<EntityMention>& mentions,
                                      std::size_t length, TagScheme scheme);

// --- glossary structures ------------------------------------------------

struct GlossaryEntry {
  std::vector<std::string> surface;
  std::size_t frequency = 0;
};

class EntityGlossary {
 public:
  void add(const std::string& entity_class, const std::vector<std::string>& surface);

  std::vector<std::string> classes() const;
  bool has_class(const std::string& entity_class) const;
  // Entries in order of first occurrence.
  const std::vector<GlossaryEntry>& entries(const std::string& entity_class) const;
  std::size_t total_frequency(const std::string& entity_class) const;
  std::size_t class_count() const { return entries_.size(); }

 private:
  std::map<std::string, std::vector<GlossaryEntry>> entries_;
  std::map<std::string, std::map<std::vector<std::string>, std::size_t>> index_;
};

EntityGlossary build_entity_glossary(const Corpus& corpus);

struct CategoricalSentenceSets {
  // Sorted, duplicate free sentence indices per class.
  std::map<std::string, std::vector<std::size_t>> sets;

  const std::vector<std::size_t>& of(const std::string& entity_class) const;
};

CategoricalSentenceSets build_categorical_sentence_sets(const Corpus& corpus);

}  // namespace flexner
