#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "flexner/crf.hpp"
#include "flexner/subnetwork.hpp"
#include "flexner/vocab.hpp"

namespace flexner {

enum class Side { kLeft, kRight, kBoth };

std::string_view side_name(Side side);
Side parse_side(std::string_view name);

// O followed by B-, I-, E-, S- for each class in the given order.
std::vector<std::string> iobes_labelset(const std::vector<std::string>& classes);
// Classes in first-appearance order of an IOBES label set.
std::vector<std::string> labelset_classes(const std::vector<std::string>& labelset);

// IOBES transition legality; an empty string stands for START (as `prev`) or
// STOP (as `cur`).
bool iobes_transition_allowed(std::string_view prev, std::string_view cur);

struct BilateralConfig {
  SubNetworkSpec left;
  SubNetworkSpec right;
  bool shared_embeddings = false;
  std::vector<std::string> labelset;
  bool pairwise_emissions = false;
  bool constrained_transitions = false;

  void validate() const;
  int feature_width() const { return left.output_width() + right.output_width(); }
};

// Two sub-networks whose contextual states are concatenated and scored by one
// shared CRF. An inactive side contributes a zero block of its nominal width.
class BilateralModel {
 public:
  BilateralModel(BilateralConfig config, Vocabularies vocab);

  void initialize(std::uint64_t seed);

  const BilateralConfig& config() const { return config_; }
  const Vocabularies& vocab() const { return vocab_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const SubNetwork& left() const { return left_; }
  const SubNetwork& right() const { return right_; }
  const SubNetwork& side(Side s) const { return s == Side::kRight ? right_ : left_; }

  int label_count() const { return static_cast<int>(config_.labelset.size()); }
  const std::vector<std::string>& labels() const { return config_.labelset; }
  int label_index(std::string_view label) const;
  std::vector<int> label_indices(const Sentence& iobes_sentence) const;
  std::vector<std::string> label_names(const std::vector<int>& indices) const;

  // IOBES copy of `sentence` with word and character ids filled in.
  Sentence prepare(const Sentence& sentence) const;
  void encode(Sentence& sentence) const;

  Side inference_side() const { return inference_side_; }
  void set_inference_side(Side side) { inference_side_ = side; }

  std::size_t projection_weight() const { return projection_weight_; }
  std::size_t projection_bias() const { return projection_bias_; }
  std::size_t transition() const { return transition_; }
  std::size_t pair_weight() const { return pair_weight_; }
  std::size_t pair_bias() const { return pair_bias_; }

  CrfParameters crf_parameters() const;

  struct Cache {
    SubNetwork::Cache left;
    SubNetwork::Cache right;
    Mat features;
  };

  // n x feature_width: [left states | right states].
  Mat features(const Sentence& prepared, Side active, std::mt19937_64* dropout, Cache* cache) const;
  // Full-connection layer to per-label scores (decomposed mode).
  Mat project(const Mat& features) const;
  // Inputs of the CRF layer: emissions in decomposed mode, features in pairwise mode.
  Mat crf_inputs(const Mat& features) const;
  Mat bilateral_forward(const Sentence& prepared, Side active) const;

  // Negative log-likelihood of the gold IOBES labels; gradients land in
  // `grads` for parameters whose group is in `trainable`.
  double loss(const Sentence& prepared, Side active, const CrfParameters& crf,
              std::mt19937_64* dropout, const GroupMask& trainable, Gradients* grads) const;

  ViterbiPath decode(const Sentence& prepared, Side active, const CrfParameters& crf) const;
  // IOBES labels for a raw sentence using the inference side.
  std::vector<std::string> predict(const Sentence& sentence) const;

 private:
  void apply_structure();

  BilateralConfig config_;
  Vocabularies vocab_;
  ParameterStore params_;
  SubNetwork left_;
  SubNetwork right_;
  std::size_t projection_weight_ = 0;
  std::size_t projection_bias_ = 0;
  std::size_t transition_ = 0;
  std::size_t pair_weight_ = 0;
  std::size_t pair_bias_ = 0;
  Side inference_side_ = Side::kBoth;
};

}  // namespace flexner
