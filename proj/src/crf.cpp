#include "flexner/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace flexner {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_labels(std::span<const int> labels, int length, int label_count) {
  if (static_cast<int>(labels.size()) != length) {
    throw Error("label sequence has " + std::to_string(labels.size()) + " entries for " +
                std::to_string(length) + " tokens");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= label_count) {
      throw Error("label index " + std::to_string(labels[i]) + " at position " +
                  std::to_string(i) + " is out of range");
    }
  }
}

}  // namespace

ScoreTable ScoreTable::zeros(int length, int labels) {
  ScoreTable t;
  t.length = length;
  t.labels = labels;
  t.start = Vec::Zero(labels);
  t.stop = Vec::Zero(labels);
  t.pair.assign(static_cast<std::size_t>(std::max(length - 1, 0)), Mat::Zero(labels, labels));
  return t;
}

double log_sum_exp(std::span<const double> values) {
  double m = kNegInf;
  for (double v : values) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

double sequence_score(const ScoreTable& table, std::span<const int> labels) {
  check_labels(labels, table.length, table.labels);
  double score = table.start(labels[0]);
  for (int i = 1; i < table.length; ++i) score += table.pair[i - 1](labels[i - 1], labels[i]);
  score += table.stop(labels[table.length - 1]);
  return score;
}

namespace {

Mat forward_lattice(const ScoreTable& t) {
  const int K = t.labels;
  Mat alpha(t.length, K);
  alpha.row(0) = t.start.transpose();
  std::vector<double> terms(static_cast<std::size_t>(K));
  for (int i = 1; i < t.length; ++i) {
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < K; ++j) terms[j] = alpha(i - 1, j) + t.pair[i - 1](j, k);
      alpha(i, k) = log_sum_exp(terms);
    }
  }
  return alpha;
}

Mat backward_lattice(const ScoreTable& t) {
  const int K = t.labels;
  Mat beta(t.length, K);
  beta.row(t.length - 1) = t.stop.transpose();
  std::vector<double> terms(static_cast<std::size_t>(K));
  for (int i = t.length - 2; i >= 0; --i) {
    for (int j = 0; j < K; ++j) {
      for (int k = 0; k < K; ++k) terms[k] = t.pair[i](j, k) + beta(i + 1, k);
      beta(i, j) = log_sum_exp(terms);
    }
  }
  return beta;
}

double terminal_log_sum(const ScoreTable& t, const Mat& alpha) {
  std::vector<double> terms(static_cast<std::size_t>(t.labels));
  for (int k = 0; k < t.labels; ++k) terms[k] = alpha(t.length - 1, k) + t.stop(k);
  return log_sum_exp(terms);
}

double safe_exp(double x) { return x == kNegInf ? 0.0 : std::exp(x); }

}  // namespace

double log_partition(const ScoreTable& table) {
  if (table.length < 1) throw Error("log partition needs at least one position");
  return terminal_log_sum(table, forward_lattice(table));
}

Posteriors forward_backward(const ScoreTable& table) {
  if (table.length < 1) throw Error("forward-backward needs at least one position");
  const int K = table.labels;
  const Mat alpha = forward_lattice(table);
  const Mat beta = backward_lattice(table);
  Posteriors out;
  out.log_partition = terminal_log_sum(table, alpha);
  const double z = out.log_partition;
  out.marginals = ScoreTable::zeros(table.length, K);
  for (int k = 0; k < K; ++k) {
    out.marginals.start(k) = safe_exp(alpha(0, k) + beta(0, k) - z);
    out.marginals.stop(k) = safe_exp(alpha(table.length - 1, k) + table.stop(k) - z);
  }
  for (int i = 1; i < table.length; ++i) {
    Mat& m = out.marginals.pair[i - 1];
    for (int j = 0; j < K; ++j) {
      for (int k = 0; k < K; ++k) {
        m(j, k) = safe_exp(alpha(i - 1, j) + table.pair[i - 1](j, k) + beta(i, k) - z);
      }
    }
  }
  return out;
}

ViterbiPath viterbi(const ScoreTable& table) {
  if (table.length < 1) throw Error("viterbi needs at least one position");
  const int K = table.labels;
  const int n = table.length;
  Mat delta(n, K);
  Eigen::MatrixXi back = Eigen::MatrixXi::Zero(n, K);
  delta.row(0) = table.start.transpose();
  for (int i = 1; i < n; ++i) {
    for (int k = 0; k < K; ++k) {
      double best = kNegInf;
      int arg = 0;
      for (int j = 0; j < K; ++j) {
        const double s = delta(i - 1, j) + table.pair[i - 1](j, k);
        if (s > best) {
          best = s;
          arg = j;
        }
      }
      delta(i, k) = best;
      back(i, k) = arg;
    }
  }
  ViterbiPath out;
  out.score = kNegInf;
  int last = 0;
  for (int k = 0; k < K; ++k) {
    const double s = delta(n - 1, k) + table.stop(k);
    if (s > out.score) {
      out.score = s;
      last = k;
    }
  }
  out.labels.assign(static_cast<std::size_t>(n), 0);
  out.labels[n - 1] = last;
  for (int i = n - 1; i > 0; --i) out.labels[i - 1] = back(i, out.labels[i]);
  return out;
}

Mat structural_transitions(int labels) {
  const int start = labels;
  const int stop = labels + 1;
  Mat t = Mat::Zero(labels + 2, labels + 2);
  t.col(start).setConstant(kNegInf);
  t.row(stop).setConstant(kNegInf);
  t(start, stop) = kNegInf;
  return t;
}

CrfParameters CrfParameters::decomposed(int labels) {
  CrfParameters crf;
  crf.labels = labels;
  crf.transition = structural_transitions(labels);
  return crf;
}

CrfParameters CrfParameters::with_pairwise(int labels, int feature_dim) {
  CrfParameters crf = decomposed(labels);
  crf.pairwise = true;
  crf.pair_weight = Mat::Zero((labels + 1) * labels, feature_dim);
  crf.pair_bias = Mat::Zero((labels + 1) * labels, 1);
  return crf;
}

ScoreTable build_score_table(const Mat& inputs, const CrfParameters& crf) {
  const int n = static_cast<int>(inputs.rows());
  const int K = crf.labels;
  if (n < 1) throw Error("score table needs at least one token");
  ScoreTable t = ScoreTable::zeros(n, K);
  if (!crf.pairwise) {
    if (inputs.cols() != K) throw Error("emission width does not match the label count");
    const int s = crf.start_index();
    const int e = crf.stop_index();
    for (int k = 0; k < K; ++k) {
      t.start(k) = inputs(0, k) + crf.transition(s, k);
      t.stop(k) = crf.transition(k, e);
    }
    for (int i = 1; i < n; ++i) {
      Mat& p = t.pair[i - 1];
      for (int j = 0; j < K; ++j) {
        for (int k = 0; k < K; ++k) p(j, k) = inputs(i, k) + crf.transition(j, k);
      }
    }
    return t;
  }
  if (inputs.cols() != crf.pair_weight.cols()) {
    throw Error("feature width does not match the pairwise CRF weights");
  }
  for (int i = 0; i < n; ++i) {
    const Vec scores = crf.pair_weight * inputs.row(i).transpose() + crf.pair_bias.col(0);
    if (i == 0) {
      for (int k = 0; k < K; ++k) t.start(k) = scores(crf.pair_row(K, k));
    } else {
      Mat& p = t.pair[i - 1];
      for (int j = 0; j < K; ++j) {
        for (int k = 0; k < K; ++k) p(j, k) = scores(crf.pair_row(j, k));
      }
    }
  }
  return t;
}

void score_table_backward(const ScoreTable& d_table, const Mat& inputs, const CrfParameters& crf,
                          Mat* d_inputs, Mat* d_transition, Mat* d_pair_weight, Mat* d_pair_bias) {
  const int n = d_table.length;
  const int K = crf.labels;
  if (!crf.pairwise) {
    if (d_inputs) {
      d_inputs->row(0) += d_table.start.transpose();
      for (int i = 1; i < n; ++i) d_inputs->row(i) += d_table.pair[i - 1].colwise().sum();
    }
    if (d_transition) {
      const int s = crf.start_index();
      const int e = crf.stop_index();
      for (int k = 0; k < K; ++k) {
        (*d_transition)(s, k) += d_table.start(k);
        (*d_transition)(k, e) += d_table.stop(k);
      }
      for (int i = 1; i < n; ++i) d_transition->topLeftCorner(K, K) += d_table.pair[i - 1];
    }
    return;
  }
  Vec g((K + 1) * K);
  for (int i = 0; i < n; ++i) {
    g.setZero();
    if (i == 0) {
      for (int k = 0; k < K; ++k) g(crf.pair_row(K, k)) = d_table.start(k);
    } else {
      for (int j = 0; j < K; ++j) {
        for (int k = 0; k < K; ++k) g(crf.pair_row(j, k)) = d_table.pair[i - 1](j, k);
      }
    }
    if (d_pair_weight) d_pair_weight->noalias() += g * inputs.row(i);
    if (d_pair_bias) d_pair_bias->col(0) += g;
    if (d_inputs) d_inputs->row(i).noalias() += g.transpose() * crf.pair_weight;
  }
}

double crf_sequence_score(const Mat& inputs, const CrfParameters& crf, std::span<const int> labels) {
  check_labels(labels, static_cast<int>(inputs.rows()), crf.labels);
  return sequence_score(build_score_table(inputs, crf), labels);
}

double crf_log_partition(const Mat& inputs, const CrfParameters& crf) {
  return log_partition(build_score_table(inputs, crf));
}

double crf_neg_log_likelihood(std::span<const LabeledInputs> batch, const CrfParameters& crf) {
  if (batch.empty()) throw Error("negative log-likelihood needs a non-empty batch");
  double total = 0.0;
  for (const auto& item : batch) {
    const ScoreTable t = build_score_table(item.inputs, crf);
    total += log_partition(t) - sequence_score(t, item.labels);
  }
  return total;
}

ViterbiPath viterbi_decode(const Mat& inputs, const CrfParameters& crf) {
  return viterbi(build_score_table(inputs, crf));
}

ScoreTable nll_table_gradient(const ScoreTable& table, std::span<const int> gold, double* nll) {
  check_labels(gold, table.length, table.labels);
  Posteriors post = forward_backward(table);
  if (nll) *nll = post.log_partition - sequence_score(table, gold);
  ScoreTable& g = post.marginals;
  g.start(gold[0]) -= 1.0;
  for (int i = 1; i < table.length; ++i) g.pair[i - 1](gold[i - 1], gold[i]) -= 1.0;
  g.stop(gold[table.length - 1]) -= 1.0;
  return std::move(post.marginals);
}

}  // namespace flexner
