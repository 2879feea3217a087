#include "flexner/bilateral.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace flexner {

namespace {
constexpr std::size_t kAbsent = std::numeric_limits<std::size_t>::max();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

std::string_view side_name(Side side) {
  switch (side) {
    case Side::kLeft:
      return "left";
    case Side::kRight:
      return "right";
    case Side::kBoth:
      return "both";
  }
  return "both";
}

Side parse_side(std::string_view name) {
  if (name == "left") return Side::kLeft;
  if (name == "right") return Side::kRight;
  if (name == "both") return Side::kBoth;
  throw Error("unknown side '" + std::string(name) + "'");
}

std::vector<std::string> iobes_labelset(const std::vector<std::string>& classes) {
  std::vector<std::string> out{"O"};
  for (const auto& c : classes) {
    for (char p : {'B', 'I', 'E', 'S'}) out.push_back(format_tag(p, c));
  }
  return out;
}

std::vector<std::string> labelset_classes(const std::vector<std::string>& labelset) {
  std::vector<std::string> out;
  for (const auto& l : labelset) {
    const Tag t = parse_tag(l);
    if (t.prefix == 'O') continue;
    if (std::find(out.begin(), out.end(), t.entity_class) == out.end()) out.push_back(t.entity_class);
  }
  return out;
}

bool iobes_transition_allowed(std::string_view prev, std::string_view cur) {
  const bool from_start = prev.empty();
  const bool to_stop = cur.empty();
  if (from_start && to_stop) return false;
  const Tag p = from_start ? Tag{} : parse_tag(prev);
  const bool inside = !from_start && (p.prefix == 'B' || p.prefix == 'I');
  if (to_stop) return !inside;
  const Tag c = parse_tag(cur);
  const bool continuation = c.prefix == 'I' || c.prefix == 'E';
  if (inside) return continuation && c.entity_class == p.entity_class;
  return !continuation;
}

void BilateralConfig::validate() const {
  left.validate();
  right.validate();
  if (labelset.empty() || std::find(labelset.begin(), labelset.end(), "O") == labelset.end()) {
    throw Error("labelset must contain O");
  }
  std::set<std::string> seen(labelset.begin(), labelset.end());
  if (seen.size() != labelset.size()) throw Error("labelset contains duplicates");
  for (const auto& cls : labelset_classes(labelset)) {
    for (char p : {'B', 'I', 'E', 'S'}) {
      if (!seen.count(format_tag(p, cls))) {
        throw Error("labelset is missing " + format_tag(p, cls));
      }
    }
  }
  if (shared_embeddings && (left.word_dim != right.word_dim || left.char_dim != right.char_dim)) {
    throw Error("shared_embeddings requires equal word_dim and char_dim on both sides");
  }
}

BilateralModel::BilateralModel(BilateralConfig config, Vocabularies vocab)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.validate();
  const std::size_t nw = vocab_.words.size();
  const std::size_t nc = vocab_.chars.size();
  EmbeddingTables left_tables;
  EmbeddingTables right_tables;
  if (config_.shared_embeddings) {
    left_tables = right_tables = create_embedding_tables(params_, "shared", ParamGroup::kSharedEmbeddings,
                                                         config_.left, nw, nc);
  } else {
    left_tables = create_embedding_tables(params_, "left", ParamGroup::kLeft, config_.left, nw, nc);
    right_tables = create_embedding_tables(params_, "right", ParamGroup::kRight, config_.right, nw, nc);
  }
  left_ = SubNetwork(config_.left, "left", ParamGroup::kLeft, params_, left_tables);
  right_ = SubNetwork(config_.right, "right", ParamGroup::kRight, params_, right_tables);

  const int K = label_count();
  const int D = config_.feature_width();
  projection_weight_ = projection_bias_ = transition_ = pair_weight_ = pair_bias_ = kAbsent;
  if (config_.pairwise_emissions) {
    pair_weight_ = params_.add("crf.pair_weight", ParamGroup::kCrf, (K + 1) * K, D, Init::kZero);
    pair_bias_ = params_.add("crf.pair_bias", ParamGroup::kCrf, (K + 1) * K, 1, Init::kZero);
  } else {
    projection_weight_ = params_.add("projection.weight", ParamGroup::kProjection, K, D,
                                     Init::kUniformFanIn);
    projection_bias_ = params_.add("projection.bias", ParamGroup::kProjection, K, 1, Init::kZero);
    transition_ = params_.add("crf.transition", ParamGroup::kCrf, K + 2, K + 2, Init::kZero);
  }
  apply_structure();
}

void BilateralModel::initialize(std::uint64_t seed) {
  params_.initialize(seed);
  apply_structure();
}

void BilateralModel::apply_structure() {
  const int K = label_count();
  const auto& L = config_.labelset;
  if (transition_ != kAbsent) {
    Mat& T = params_.value(transition_);
    const Mat structural = structural_transitions(K);
    for (Eigen::Index r = 0; r < T.rows(); ++r) {
      for (Eigen::Index c = 0; c < T.cols(); ++c) {
        if (structural(r, c) == kNegInf) T(r, c) = kNegInf;
      }
    }
    if (config_.constrained_transitions) {
      for (int j = 0; j <= K; ++j) {
        const std::string_view prev = j == K ? std::string_view{} : std::string_view{L[j]};
        for (int k = 0; k <= K; ++k) {
          if (j == K && k == K) continue;
          const std::string_view cur = k == K ? std::string_view{} : std::string_view{L[k]};
          const int row = j == K ? K : j;
          const int col = k == K ? K + 1 : k;
          if (!iobes_transition_allowed(prev, cur)) T(row, col) = kNegInf;
        }
      }
    }
  }
  if (pair_bias_ != kAbsent && config_.constrained_transitions) {
    Mat& b = params_.value(pair_bias_);
    for (int j = 0; j <= K; ++j) {
      const std::string_view prev = j == K ? std::string_view{} : std::string_view{L[j]};
      for (int k = 0; k < K; ++k) {
        if (!iobes_transition_allowed(prev, L[k])) b(j * K + k, 0) = kNegInf;
      }
    }
  }
}

int BilateralModel::label_index(std::string_view label) const {
  for (int i = 0; i < label_count(); ++i) {
    if (config_.labelset[i] == label) return i;
  }
  throw Error("label '" + std::string(label) + "' is not in the model's label set");
}

std::vector<int> BilateralModel::label_indices(const Sentence& iobes_sentence) const {
  std::vector<int> out;
  out.reserve(iobes_sentence.labels.size());
  for (const auto& l : iobes_sentence.labels) out.push_back(label_index(l));
  return out;
}

std::vector<std::string> BilateralModel::label_names(const std::vector<int>& indices) const {
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(config_.labelset.at(static_cast<std::size_t>(i)));
  return out;
}

void BilateralModel::encode(Sentence& sentence) const { encode_sentence(sentence, vocab_); }

Sentence BilateralModel::prepare(const Sentence& sentence) const {
  Sentence out = sentence.scheme == TagScheme::kIobes ? sentence
                                                       : convert_sentence(sentence, TagScheme::kIobes);
  encode(out);
  return out;
}

CrfParameters BilateralModel::crf_parameters() const {
  CrfParameters crf;
  crf.labels = label_count();
  if (config_.pairwise_emissions) {
    crf.pairwise = true;
    crf.transition = structural_transitions(crf.labels);
    crf.pair_weight = params_.value(pair_weight_);
    crf.pair_bias = params_.value(pair_bias_);
  } else {
    crf.transition = params_.value(transition_);
  }
  return crf;
}

Mat BilateralModel::features(const Sentence& prepared, Side active, std::mt19937_64* dropout,
                             Cache* cache) const {
  const auto n = static_cast<Eigen::Index>(prepared.size());
  if (n < 1) throw Error("cannot score an empty sentence");
  const int wl = config_.left.output_width();
  const int wr = config_.right.output_width();
  Mat z = Mat::Zero(n, wl + wr);
  if (active != Side::kRight) {
    z.leftCols(wl) = left_.forward(params_, prepared, dropout, cache ? &cache->left : nullptr);
  }
  if (active != Side::kLeft) {
    z.rightCols(wr) = right_.forward(params_, prepared, dropout, cache ? &cache->right : nullptr);
  }
  if (cache) cache->features = z;
  return z;
}

Mat BilateralModel::project(const Mat& features) const {
  if (projection_weight_ == kAbsent) throw Error("pairwise models have no projection layer");
  Mat e = features * params_.value(projection_weight_).transpose();
  e.rowwise() += params_.value(projection_bias_).col(0).transpose();
  return e;
}

Mat BilateralModel::crf_inputs(const Mat& features) const {
  return config_.pairwise_emissions ? features : project(features);
}

Mat BilateralModel::bilateral_forward(const Sentence& prepared, Side active) const {
  return crf_inputs(features(prepared, active, nullptr, nullptr));
}

double BilateralModel::loss(const Sentence& prepared, Side active, const CrfParameters& crf,
                            std::mt19937_64* dropout, const GroupMask& trainable,
                            Gradients* grads) const {
  Cache cache;
  const Mat z = features(prepared, active, dropout, grads ? &cache : nullptr);
  const Mat inputs = crf_inputs(z);
  const std::vector<int> gold = label_indices(prepared);
  double nll = 0.0;
  if (!grads) {
    const ScoreTable table = build_score_table(inputs, crf);
    return log_partition(table) - sequence_score(table, gold);
  }
  const ScoreTable table = build_score_table(inputs, crf);
  const ScoreTable d_table = nll_table_gradient(table, gold, &nll);

  const bool crf_trainable = trainable.contains(ParamGroup::kCrf);
  Mat d_z;
  if (config_.pairwise_emissions) {
    d_z = Mat::Zero(z.rows(), z.cols());
    score_table_backward(d_table, z, crf, &d_z, nullptr,
                         crf_trainable ? &grads->dense(pair_weight_) : nullptr,
                         crf_trainable ? &grads->dense(pair_bias_) : nullptr);
  } else {
    Mat d_e = Mat::Zero(inputs.rows(), inputs.cols());
    score_table_backward(d_table, inputs, crf, &d_e,
                         crf_trainable ? &grads->dense(transition_) : nullptr, nullptr, nullptr);
    if (trainable.contains(ParamGroup::kProjection)) {
      grads->dense(projection_weight_).noalias() += d_e.transpose() * z;
      grads->dense(projection_bias_).col(0) += d_e.colwise().sum().transpose();
    }
    d_z = d_e * params_.value(projection_weight_);
  }

  const bool shared = config_.shared_embeddings && trainable.contains(ParamGroup::kSharedEmbeddings);
  const int wl = config_.left.output_width();
  const int wr = config_.right.output_width();
  if (active != Side::kRight && (trainable.contains(ParamGroup::kLeft) || shared)) {
    left_.backward(params_, prepared, cache.left, d_z.leftCols(wl), grads);
  }
  if (active != Side::kLeft && (trainable.contains(ParamGroup::kRight) || shared)) {
    right_.backward(params_, prepared, cache.right, d_z.rightCols(wr), grads);
  }
  return nll;
}

ViterbiPath BilateralModel::decode(const Sentence& prepared, Side active,
                                   const CrfParameters& crf) const {
  return viterbi(build_score_table(crf_inputs(features(prepared, active, nullptr, nullptr)), crf));
}

std::vector<std::string> BilateralModel::predict(const Sentence& sentence) const {
  Sentence prepared = sentence;
  encode(prepared);
  return label_names(decode(prepared, inference_side_, crf_parameters()).labels);
}

}  // namespace flexner
