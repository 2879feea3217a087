#include "flexner/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace flexner {

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line), detail_(what) {}

LabelError::LabelError(std::size_t position, const std::string& what)
    : Error("label position " + std::to_string(position) + ": " + what), position_(position) {}

std::string_view scheme_name(TagScheme scheme) {
  return scheme == TagScheme::kIob2 ? "IOB2" : "IOBES";
}

TagScheme parse_scheme(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "IOB2" || upper == "BIO") return TagScheme::kIob2;
  if (upper == "IOBES" || upper == "BIOES") return TagScheme::kIobes;
  throw Error("unsupported tag scheme '" + std::string(name) + "'");
}

std::vector<char32_t> decode_utf8(std::string_view text) {
  constexpr char32_t kReplacement = 0xFFFD;
  std::vector<char32_t> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      extra = 1;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      extra = 2;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      extra = 3;
      cp = lead & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= text.size()) {
        ok = false;
        break;
      }
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

std::string encode_utf8(const std::vector<char32_t>& code_points) {
  std::string out;
  for (char32_t cp : code_points) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

Token make_token(std::string surface) {
  if (surface.empty()) throw Error("token surface must be non-empty");
  Token token;
  token.characters = decode_utf8(surface);
  token.surface = std::move(surface);
  return token;
}

std::vector<std::string> Sentence::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

Sentence make_sentence(const std::vector<std::string>& words, std::vector<std::string> labels,
                       TagScheme scheme) {
  if (words.size() != labels.size()) throw Error("token and label counts differ");
  Sentence s;
  s.scheme = scheme;
  s.tokens.reserve(words.size());
  for (const auto& w : words) s.tokens.push_back(make_token(w));
  s.labels = std::move(labels);
  return s;
}

// --- column format ------------------------------------------------------

namespace {

constexpr std::string_view kDocStart = "-DOCSTART-";

std::vector<std::string> split_columns(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> cols;
  std::string col;
  while (in >> col) cols.push_back(col);
  return cols;
}

}  // namespace

Corpus parse_column_corpus(std::istream& in, const ColumnFormat& format) {
  Corpus corpus;
  corpus.scheme = format.scheme;
  Sentence current;
  current.scheme = format.scheme;
  bool pending_docstart = false;
  std::size_t block_start_line = 0;

  auto flush = [&]() {
    if (current.tokens.empty()) return;
    if (auto bad = format.validate ? first_invalid_position(current.labels, format.scheme)
                                   : std::nullopt) {
      throw ParseError(block_start_line + *bad,
                       "label '" + current.labels[*bad] + "' is invalid under " +
                           std::string(scheme_name(format.scheme)));
    }
    if (pending_docstart) {
      corpus.document_starts.push_back(corpus.sentences.size());
      pending_docstart = false;
    }
    corpus.sentences.push_back(std::move(current));
    current = Sentence{};
    current.scheme = format.scheme;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cols = split_columns(line);
    if (cols.empty()) {
      flush();
      continue;
    }
    const std::size_t needed =
        std::max(format.token_column, format.label_column.value_or(0)) + 1;
    if (cols.size() < needed) {
      throw ParseError(line_no, "expected at least " + std::to_string(needed) +
                                    " columns, found " + std::to_string(cols.size()));
    }
    if (cols[format.token_column] == kDocStart) {
      flush();
      pending_docstart = true;
      continue;
    }
    if (current.tokens.empty()) block_start_line = line_no;
    current.tokens.push_back(make_token(cols[format.token_column]));
    current.labels.push_back(format.label_column ? cols[*format.label_column] : "O");
  }
  flush();
  if (corpus.sentences.empty() && !format.allow_empty) {
    throw ParseError(line_no, "corpus contains no sentences");
  }
  return corpus;
}

Corpus read_column_corpus(const std::string& path, const ColumnFormat& format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file '" + path + "'");
  try {
    return parse_column_corpus(in, format);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + e.detail());
  }
}

void write_column_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.tokens[i].surface << ' ' << s.labels[i] << '\n';
    }
    out << '\n';
  }
}

void write_column_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus file '" + path + "'");
  write_column_corpus(out, corpus);
}

// --- tags ---------------------------------------------------------------

Tag parse_tag(std::string_view label) {
  if (label == "O") return Tag{};
  if (label.size() < 3 || label[1] != '-') {
    throw Error("malformed tag '" + std::string(label) + "'");
  }
  const char prefix = label[0];
  if (prefix != 'B' && prefix != 'I' && prefix != 'E' && prefix != 'S') {
    throw Error("malformed tag '" + std::string(label) + "'");
  }
  return Tag{prefix, std::string(label.substr(2))};
}

std::string format_tag(char prefix, std::string_view entity_class) {
  if (prefix == 'O') return "O";
  std::string out(1, prefix);
  out += '-';
  out += entity_class;
  return out;
}

namespace {

struct OpenSpan {
  std::string entity_class;
  std::size_t start = 0;
};

// Shared scanner for both schemes; reports the first violation through
// `violation` instead of throwing so the validity predicate stays cheap.
SpanExtraction scan_spans(const std::vector<std::string>& labels, TagScheme scheme, Repair repair,
                          std::optional<std::size_t>& violation, std::string& reason) {
  SpanExtraction result;
  std::optional<OpenSpan> open;
  violation.reset();

  auto fail = [&](std::size_t pos, std::string why) {
    if (!violation) {
      violation = pos;
      reason = std::move(why);
    }
    result.repaired = true;
    return repair == Repair::kStrict;
  };
  auto close = [&](std::size_t end) {
    if (open) {
      result.mentions.push_back(EntityMention{open->entity_class, open->start, end, {}});
      open.reset();
    }
  };

  for (std::size_t i = 0; i < labels.size(); ++i) {
    Tag tag;
    try {
      tag = parse_tag(labels[i]);
    } catch (const Error&) {
      violation = i;
      reason = "malformed tag '" + labels[i] + "'";
      return result;
    }
    if (scheme == TagScheme::kIob2 && (tag.prefix == 'E' || tag.prefix == 'S')) {
      violation = i;
      reason = "tag '" + labels[i] + "' does not belong to IOB2";
      return result;
    }
    const bool continues = open && open->entity_class == tag.entity_class;
    switch (tag.prefix) {
      case 'O':
        if (open && scheme == TagScheme::kIobes) {
          if (fail(i, "span opened at " + std::to_string(open->start) + " is not closed by E-")) {
            return result;
          }
        }
        close(i);
        break;
      case 'B':
        if (open && scheme == TagScheme::kIobes) {
          if (fail(i, "span opened at " + std::to_string(open->start) + " is not closed by E-")) {
            return result;
          }
        }
        close(i);
        open = OpenSpan{tag.entity_class, i};
        break;
      case 'I':
        if (!continues) {
          if (fail(i, "'" + labels[i] + "' does not continue an open span")) return result;
          close(i);
          open = OpenSpan{tag.entity_class, i};
        }
        break;
      case 'E':
        if (continues) {
          close(i + 1);
        } else {
          if (fail(i, "'" + labels[i] + "' does not close an open span")) return result;
          close(i);
          result.mentions.push_back(EntityMention{tag.entity_class, i, i + 1, {}});
        }
        break;
      case 'S':
        if (open) {
          if (fail(i, "span opened at " + std::to_string(open->start) + " is not closed by E-")) {
            return result;
          }
        }
        close(i);
        result.mentions.push_back(EntityMention{tag.entity_class, i, i + 1, {}});
        break;
      default:
        break;
    }
  }
  if (open && scheme == TagScheme::kIobes) {
    if (fail(labels.size() - 1, "span opened at " + std::to_string(open->start) +
                                    " runs off the end of the sentence")) {
      return result;
    }
  }
  close(labels.size());
  return result;
}

}  // namespace

std::optional<std::size_t> first_invalid_position(const std::vector<std::string>& labels,
                                                  TagScheme scheme) {
  std::optional<std::size_t> violation;
  std::string reason;
  scan_spans(labels, scheme, Repair::kStrict, violation, reason);
  return violation;
}

bool is_valid_sequence(const std::vector<std::string>& labels, TagScheme scheme) {
  return !first_invalid_position(labels, scheme).has_value();
}

void validate_labels(const std::vector<std::string>& labels, TagScheme scheme) {
  std::optional<std::size_t> violation;
  std::string reason;
  scan_spans(labels, scheme, Repair::kStrict, violation, reason);
  if (violation) throw LabelError(*violation, reason);
}

SpanExtraction extract_spans(const std::vector<std::string>& labels, TagScheme scheme,
                             Repair repair) {
  std::optional<std::size_t> violation;
  std::string reason;
  auto result = scan_spans(labels, scheme, repair, violation, reason);
  if (violation && (repair == Repair::kStrict || reason.rfind("malformed", 0) == 0 ||
                    reason.find("does not belong") != std::string::npos)) {
    throw LabelError(*violation, reason);
  }
  return result;
}

std::vector<EntityMention> extract_entities(const Sentence& sentence, Repair repair) {
  auto spans = extract_spans(sentence.labels, sentence.scheme, repair);
  for (auto& m : spans.mentions) {
    for (std::size_t i = m.start; i < m.end; ++i) m.surface.push_back(sentence.tokens[i].surface);
  }
  return std::move(spans.mentions);
}

std::vector<std::string> write_labels(const std::vector<EntityMention>& mentions,
                                      std::size_t length, TagScheme scheme) {
  std::vector<std::string> labels(length, "O");
  std::size_t last_end = 0;
  for (const auto& m : mentions) {
    if (m.start >= m.end || m.end > length || m.start < last_end) {
      throw Error("mentions overlap or fall outside the sentence");
    }
    last_end = m.end;
    if (scheme == TagScheme::kIob2) {
      labels[m.start] = format_tag('B', m.entity_class);
      for (std::size_t i = m.start + 1; i < m.end; ++i) labels[i] = format_tag('I', m.entity_class);
    } else if (m.length() == 1) {
      labels[m.start] = format_tag('S', m.entity_class);
    } else {
      labels[m.start] = format_tag('B', m.entity_class);
      for (std::size_t i = m.start + 1; i + 1 < m.end; ++i) {
        labels[i] = format_tag('I', m.entity_class);
      }
      labels[m.end - 1] = format_tag('E', m.entity_class);
    }
  }
  return labels;
}

std::vector<std::string> convert_scheme(const std::vector<std::string>& labels, TagScheme from,
                                        TagScheme to) {
  const auto spans = extract_spans(labels, from, Repair::kStrict);
  return write_labels(spans.mentions, labels.size(), to);
}

Sentence convert_sentence(const Sentence& sentence, TagScheme to) {
  Sentence out = sentence;
  out.labels = convert_scheme(sentence.labels, sentence.scheme, to);
  out.scheme = to;
  return out;
}

Corpus convert_corpus(const Corpus& corpus, TagScheme to) {
  Corpus out;
  out.scheme = to;
  out.document_starts = corpus.document_starts;
  out.sentences.reserve(corpus.size());
  for (const auto& s : corpus.sentences) out.sentences.push_back(convert_sentence(s, to));
  return out;
}

// --- glossary -----------------------------------------------------------

void EntityGlossary::add(const std::string& entity_class, const std::vector<std::string>& surface) {
  auto& idx = index_[entity_class];
  auto& list = entries_[entity_class];
  auto it = idx.find(surface);
  if (it == idx.end()) {
    idx.emplace(surface, list.size());
    list.push_back(GlossaryEntry{surface, 1});
  } else {
    ++list[it->second].frequency;
  }
}

std::vector<std::string> EntityGlossary::classes() const {
  std::vector<std::string> out;
  for (const auto& [cls, _] : entries_) out.push_back(cls);
  return out;
}

bool EntityGlossary::has_class(const std::string& entity_class) const {
  return entries_.count(entity_class) > 0;
}

const std::vector<GlossaryEntry>& EntityGlossary::entries(const std::string& entity_class) const {
  static const std::vector<GlossaryEntry> kEmpty;
  auto it = entries_.find(entity_class);
  return it == entries_.end() ? kEmpty : it->second;
}

std::size_t EntityGlossary::total_frequency(const std::string& entity_class) const {
  std::size_t total = 0;
  for (const auto& e : entries(entity_class)) total += e.frequency;
  return total;
}

EntityGlossary build_entity_glossary(const Corpus& corpus) {
  EntityGlossary glossary;
  for (const auto& s : corpus.sentences) {
    for (const auto& m : extract_entities(s)) glossary.add(m.entity_class, m.surface);
  }
  return glossary;
}

const std::vector<std::size_t>& CategoricalSentenceSets::of(const std::string& entity_class) const {
  static const std::vector<std::size_t> kEmpty;
  auto it = sets.find(entity_class);
  return it == sets.end() ? kEmpty : it->second;
}

CategoricalSentenceSets build_categorical_sentence_sets(const Corpus& corpus) {
  CategoricalSentenceSets out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (const auto& m : extract_entities(corpus.sentences[i])) {
      auto& set = out.sets[m.entity_class];
      if (set.empty() || set.back() != i) set.push_back(i);
    }
  }
  return out;
}

}  // namespace flexner
