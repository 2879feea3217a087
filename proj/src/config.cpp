#include "flexner/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace flexner {

ConfigError::ConfigError(std::string key, const std::string& what)
    : Error(key + ": " + what), key_(std::move(key)) {}

std::string_view training_mode_name(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::kSeparate:
      return "separate";
    case TrainingMode::kJoint:
      return "joint";
    case TrainingMode::kBaseline:
      return "baseline";
  }
  return "?";
}

namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string l = ascii_lower(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::string format_real(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string format_bool(bool v) { return v ? "true" : "false"; }

template <typename Parse>
auto parse_enum(const std::string& key, const std::string& v, Parse parse) {
  try {
    return parse(v);
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Ref>
Field string_field(std::string key, Ref ref) {
  return {key, [ref](RunConfig& c, const std::string& v) { ref(c) = v; },
          [ref](const RunConfig& c) { return ref(c); }};
}

template <typename Ref>
Field path_field(std::string key, Ref ref) {
  return {key,
          [ref](RunConfig& c, const std::string& v) {
            if (v.empty()) {
              ref(c).reset();
            } else {
              ref(c) = v;
            }
          },
          [ref](const RunConfig& c) { return ref(c).value_or(""); }};
}

template <typename Ref>
Field size_field(std::string key, Ref ref) {
  return {key, [ref, key](RunConfig& c, const std::string& v) { ref(c) = parse_size(key, v); },
          [ref](const RunConfig& c) { return std::to_string(ref(c)); }};
}

template <typename Ref>
Field int_field(std::string key, Ref ref) {
  return {key, [ref, key](RunConfig& c, const std::string& v) { ref(c) = parse_int(key, v); },
          [ref](const RunConfig& c) { return std::to_string(ref(c)); }};
}

template <typename Ref>
Field real_field(std::string key, Ref ref) {
  return {key, [ref, key](RunConfig& c, const std::string& v) { ref(c) = parse_real(key, v); },
          [ref](const RunConfig& c) { return format_real(ref(c)); }};
}

template <typename Ref>
Field bool_field(std::string key, Ref ref) {
  return {key, [ref, key](RunConfig& c, const std::string& v) { ref(c) = parse_bool(key, v); },
          [ref](const RunConfig& c) { return format_bool(ref(c)); }};
}

void add_side_fields(std::vector<Field>& out, const std::string& side,
                     SubNetworkSpec& (*spec)(RunConfig&)) {
  const auto k = [&](const char* name) { return side + "." + name; };
  auto cspec = [spec](const RunConfig& c) -> const SubNetworkSpec& {
    return spec(const_cast<RunConfig&>(c));
  };
  out.push_back({k("char_encoder"),
                 [spec, key = k("char_encoder")](RunConfig& c, const std::string& v) {
                   spec(c).char_encoder = parse_enum(key, v, parse_char_encoder);
                 },
                 [cspec](const RunConfig& c) {
                   return std::string(char_encoder_name(cspec(c).char_encoder));
                 }});
  out.push_back({k("word_encoder"),
                 [spec, key = k("word_encoder")](RunConfig& c, const std::string& v) {
                   spec(c).word_encoder = parse_enum(key, v, parse_word_encoder);
                 },
                 [cspec](const RunConfig& c) {
                   return std::string(word_encoder_name(cspec(c).word_encoder));
                 }});
  out.push_back({k("conv_activation"),
                 [spec, key = k("conv_activation")](RunConfig& c, const std::string& v) {
                   spec(c).conv_activation = parse_enum(key, v, parse_activation);
                 },
                 [cspec](const RunConfig& c) {
                   return std::string(activation_name(cspec(c).conv_activation));
                 }});
  using Member = int SubNetworkSpec::*;
  const std::pair<const char*, Member> ints[] = {
      {"char_dim", &SubNetworkSpec::char_dim},
      {"char_hidden_dim", &SubNetworkSpec::char_hidden_dim},
      {"char_filters", &SubNetworkSpec::char_filters},
      {"char_kernel_width", &SubNetworkSpec::char_kernel_width},
      {"word_dim", &SubNetworkSpec::word_dim},
      {"hidden_dim", &SubNetworkSpec::hidden_dim},
      {"conv_filters", &SubNetworkSpec::conv_filters},
      {"conv_kernel_width", &SubNetworkSpec::conv_kernel_width},
      {"conv_layers", &SubNetworkSpec::conv_layers},
  };
  for (const auto& [name, member] : ints) {
    out.push_back(int_field(k(name), [spec, cspec, member](auto& c) -> auto& {
      if constexpr (std::is_const_v<std::remove_reference_t<decltype(c)>>) {
        return cspec(c).*member;
      } else {
        return spec(c).*member;
      }
    }));
  }
  out.push_back(real_field(k("dropout"), [spec, cspec](auto& c) -> auto& {
    if constexpr (std::is_const_v<std::remove_reference_t<decltype(c)>>) {
      return cspec(c).dropout;
    } else {
      return spec(c).dropout;
    }
  }));
}

SubNetworkSpec& left_spec(RunConfig& c) { return c.model.left; }
SubNetworkSpec& right_spec(RunConfig& c) { return c.model.right; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(string_field("train_path", [](auto& c) -> auto& { return c.train_path; }));
    f.push_back(path_field("dev_path", [](auto& c) -> auto& { return c.dev_path; }));
    f.push_back(path_field("test_path", [](auto& c) -> auto& { return c.test_path; }));
    f.push_back(path_field("embeddings_path", [](auto& c) -> auto& { return c.embeddings_path; }));
    f.push_back(string_field("output_dir", [](auto& c) -> auto& { return c.output_dir; }));
    f.push_back(string_field("run_name", [](auto& c) -> auto& { return c.run_name; }));
    f.push_back({"scheme",
                 [](RunConfig& c, const std::string& v) {
                   c.scheme = parse_enum("scheme", v, parse_scheme);
                 },
                 [](const RunConfig& c) { return std::string(scheme_name(c.scheme)); }});
    f.push_back(size_field("token_column", [](auto& c) -> auto& { return c.token_column; }));
    f.push_back(size_field("label_column", [](auto& c) -> auto& { return c.label_column; }));
    f.push_back(
        size_field("min_word_frequency", [](auto& c) -> auto& { return c.min_word_frequency; }));
    f.push_back({"classes",
                 [](RunConfig& c, const std::string& v) {
                   c.classes.clear();
                   std::stringstream in(v);
                   std::string item;
                   while (std::getline(in, item, ',')) {
                     item = trim(item);
                     if (item.empty()) throw ConfigError("classes", "empty class name");
                     c.classes.push_back(item);
                   }
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.classes.size(); ++i) {
                     if (i) out += ",";
                     out += c.classes[i];
                   }
                   return out;
                 }});
    add_side_fields(f, "left", left_spec);
    add_side_fields(f, "right", right_spec);
    f.push_back(bool_field("shared_embeddings",
                           [](auto& c) -> auto& { return c.model.shared_embeddings; }));
    f.push_back(bool_field("pairwise_emissions",
                           [](auto& c) -> auto& { return c.model.pairwise_emissions; }));
    f.push_back(bool_field("constrained_transitions",
                           [](auto& c) -> auto& { return c.model.constrained_transitions; }));
    f.push_back({"training",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "separate") {
                     c.mode = TrainingMode::kSeparate;
                   } else if (v == "joint") {
                     c.mode = TrainingMode::kJoint;
                   } else if (v == "baseline") {
                     c.mode = TrainingMode::kBaseline;
                   } else {
                     throw ConfigError("training", "expected separate, joint or baseline, got '" +
                                                       v + "'");
                   }
                 },
                 [](const RunConfig& c) { return std::string(training_mode_name(c.mode)); }});
    f.push_back(size_field("epochs_left", [](auto& c) -> auto& { return c.train.epochs_left; }));
    f.push_back(size_field("epochs_right", [](auto& c) -> auto& { return c.train.epochs_right; }));
    f.push_back(
        size_field("epochs_finetune", [](auto& c) -> auto& { return c.train.epochs_finetune; }));
    f.push_back(size_field("epochs_joint", [](auto& c) -> auto& { return c.train.epochs_joint; }));
    f.push_back(size_field("batch_size", [](auto& c) -> auto& { return c.train.batch_size; }));
    f.push_back({"optimizer",
                 [](RunConfig& c, const std::string& v) {
                   c.train.optimizer.kind = parse_enum("optimizer", v, parse_optimizer);
                 },
                 [](const RunConfig& c) {
                   return std::string(optimizer_name(c.train.optimizer.kind));
                 }});
    f.push_back(real_field("learning_rate",
                           [](auto& c) -> auto& { return c.train.optimizer.learning_rate; }));
    f.push_back(real_field("lr_decay", [](auto& c) -> auto& { return c.train.optimizer.lr_decay; }));
    f.push_back(real_field("momentum", [](auto& c) -> auto& { return c.train.optimizer.momentum; }));
    f.push_back({"gradient_clip",
                 [](RunConfig& c, const std::string& v) {
                   if (ascii_lower(v) == "none") {
                     c.train.optimizer.gradient_clip.reset();
                   } else {
                     c.train.optimizer.gradient_clip = parse_real("gradient_clip", v);
                   }
                 },
                 [](const RunConfig& c) {
                   const auto& g = c.train.optimizer.gradient_clip;
                   return g ? format_real(*g) : std::string("none");
                 }});
    f.push_back({"seed",
                 [](RunConfig& c, const std::string& v) { c.train.seed = parse_u64("seed", v); },
                 [](const RunConfig& c) { return std::to_string(c.train.seed); }});
    f.push_back(size_field("early_stopping_patience",
                           [](auto& c) -> auto& { return c.train.early_stopping_patience; }));
    f.push_back(bool_field("parallel", [](auto& c) -> auto& { return c.train.parallel; }));
    f.push_back(int_field("threads", [](auto& c) -> auto& { return c.threads; }));
    f.push_back({"augment.mode",
                 [](RunConfig& c, const std::string& v) {
                   c.train.augment.mode = parse_enum("augment.mode", v, parse_augment_mode);
                 },
                 [](const RunConfig& c) {
                   return std::string(augment_mode_name(c.train.augment.mode));
                 }});
    f.push_back(real_field("augment.p", [](auto& c) -> auto& { return c.train.augment.bernoulli_p; }));
    f.push_back({"augment.seed",
                 [](RunConfig& c, const std::string& v) {
                   c.train.augment.seed = parse_u64("augment.seed", v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.train.augment.seed); }});
    f.push_back({"augment.max_per_epoch",
                 [](RunConfig& c, const std::string& v) {
                   if (ascii_lower(v) == "none" || v.empty()) {
                     c.train.augment.max_per_epoch.reset();
                   } else {
                     c.train.augment.max_per_epoch = parse_size("augment.max_per_epoch", v);
                   }
                 },
                 [](const RunConfig& c) {
                   const auto& m = c.train.augment.max_per_epoch;
                   return m ? std::to_string(*m) : std::string("none");
                 }});
    f.push_back(bool_field("augment.weighted",
                           [](auto& c) -> auto& { return c.train.augment.frequency_weighted; }));
    return f;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError(key, "unknown config key");
}

void require_file(const std::string& key, const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw ConfigError(key, "no such file '" + path + "'");
}

}  // namespace

ColumnFormat RunConfig::column_format(bool labeled) const {
  ColumnFormat f;
  f.token_column = token_column;
  f.label_column = labeled ? std::optional<std::size_t>(label_column) : std::nullopt;
  f.scheme = scheme;
  return f;
}

std::string RunConfig::run_directory() const { return (fs::path(output_dir) / run_name).string(); }

void RunConfig::validate() const {
  if (train_path.empty()) throw ConfigError("train_path", "required");
  require_file("train_path", train_path);
  if (dev_path) require_file("dev_path", *dev_path);
  if (test_path) require_file("test_path", *test_path);
  if (embeddings_path) require_file("embeddings_path", *embeddings_path);
  if (run_name.empty() || run_name.find('/') != std::string::npos) {
    throw ConfigError("run_name", "must be a non-empty name without '/'");
  }
  if (output_dir.empty()) throw ConfigError("output_dir", "required");
  {
    fs::path p = fs::absolute(output_dir);
    std::error_code ec;
    while (!p.empty() && !fs::exists(p, ec)) p = p.parent_path();
    if (!fs::is_directory(p, ec)) {
      throw ConfigError("output_dir", "cannot create '" + output_dir + "'");
    }
  }
  if (token_column == label_column) {
    throw ConfigError("label_column", "must differ from token_column");
  }
  if (min_word_frequency < 1) throw ConfigError("min_word_frequency", "must be at least 1");
  const auto check_spec = [](const std::string& side, const SubNetworkSpec& s) {
    try {
      s.validate();
    } catch (const std::exception& e) {
      throw ConfigError(side, e.what());
    }
  };
  check_spec("left", model.left);
  check_spec("right", model.right);
  if (train.batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  if (!(train.optimizer.learning_rate > 0.0)) throw ConfigError("learning_rate", "must be positive");
  if (train.optimizer.lr_decay < 0.0) throw ConfigError("lr_decay", "must be non-negative");
  if (train.optimizer.momentum < 0.0 || train.optimizer.momentum >= 1.0) {
    throw ConfigError("momentum", "must lie in [0, 1)");
  }
  if (train.optimizer.gradient_clip && !(*train.optimizer.gradient_clip > 0.0)) {
    throw ConfigError("gradient_clip", "must be positive or none");
  }
  if (!(train.augment.bernoulli_p >= 0.0 && train.augment.bernoulli_p <= 1.0)) {
    throw ConfigError("augment.p", "must lie in [0, 1]");
  }
  if (threads < 0) throw ConfigError("threads", "must be non-negative");
}

RunConfig parse_run_config(std::istream& in) {
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    }
    set_config_value(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  return parse_run_config(in);
}

void write_run_config(std::ostream& out, const RunConfig& config) {
  for (const auto& f : fields()) out << f.key << " = " << f.get(config) << '\n';
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  field(key).set(config, value);
}

std::string get_config_value(const RunConfig& config, const std::string& key) {
  return field(key).get(config);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

std::string env_name(const std::string& key) {
  std::string out = "FLEXNER_";
  for (char c : key) {
    out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

void apply_env_overrides(RunConfig& config,
                         const std::function<const char*(const char*)>& lookup) {
  for (const auto& f : fields()) {
    if (const char* v = lookup(env_name(f.key).c_str())) f.set(config, trim(v));
  }
}

std::vector<std::string> resolve_labelset(const RunConfig& config, const Corpus& train) {
  if (!config.classes.empty()) {
    const EntityGlossary glossary = build_entity_glossary(train);
    for (const auto& c : glossary.classes()) {
      if (std::find(config.classes.begin(), config.classes.end(), c) == config.classes.end()) {
        throw ConfigError("classes", "training data contains undeclared class '" + c + "'");
      }
    }
    return iobes_labelset(config.classes);
  }
  return iobes_labelset(build_entity_glossary(train).classes());
}

}  // namespace flexner
