#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flexner/bilateral.hpp"
#include "flexner/corpus.hpp"
#include "flexner/training.hpp"

namespace flexner {

// Raised for a bad config entry; key() names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class TrainingMode { kSeparate, kJoint, kBaseline };

std::string_view training_mode_name(TrainingMode mode);

struct RunConfig {
  std::string train_path;
  std::optional<std::string> dev_path;
  std::optional<std::string> test_path;
  std::optional<std::string> embeddings_path;
  std::string output_dir = "runs";
  std::string run_name = "run";

  TagScheme scheme = TagScheme::kIob2;
  std::size_t token_column = 0;
  std::size_t label_column = 1;
  std::size_t min_word_frequency = 1;
  // Entity classes of the label set; empty means the classes of the training data.
  std::vector<std::string> classes;

  BilateralConfig model;  // labelset is filled in by resolve_labelset
  TrainConfig train;
  TrainingMode mode = TrainingMode::kSeparate;
  int threads = 0;  // 0: OpenMP default

  ColumnFormat column_format(bool labeled = true) const;
  std::string run_directory() const;
  // Checks paths and value ranges; throws ConfigError.
  void validate() const;
};

// Flat "key = value" lines; '#' starts a comment.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::string& path);
void write_run_config(std::ostream& out, const RunConfig& config);

void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& config, const std::string& key);
std::vector<std::string> config_keys();

// FLEXNER_<KEY>, key upper-cased with '.' mapped to '_'.
std::string env_name(const std::string& key);
void apply_env_overrides(RunConfig& config,
                         const std::function<const char*(const char*)>& lookup);

// Label set of the run: declared classes or the sorted classes of `train`.
std::vector<std::string> resolve_labelset(const RunConfig& config, const Corpus& train);

}  // namespace flexner
