#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "flexner/error.hpp"

namespace flexner {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Log-potentials of a linear chain over `labels` states. Position 0 scores the
// step out of the virtual START label, `pair[i - 1](prev, cur)` scores
// position i, and `stop` scores the step into the virtual STOP label.
struct ScoreTable {
  int length = 0;
  int labels = 0;
  Vec start;
  std::vector<Mat> pair;
  Vec stop;

  static ScoreTable zeros(int length, int labels);
};

double sequence_score(const ScoreTable& table, std::span<const int> labels);
double log_partition(const ScoreTable& table);

struct Posteriors {
  double log_partition = 0.0;
  ScoreTable marginals;  // expected potential counts, same layout as the table
};

Posteriors forward_backward(const ScoreTable& table);

struct ViterbiPath {
  std::vector<int> labels;
  double score = 0.0;
};

// Ties resolve toward the lowest label index.
ViterbiPath viterbi(const ScoreTable& table);

double log_sum_exp(std::span<const double> values);

// Label-pair parameters. Rows and columns of `transition` index the real labels
// followed by START (K) and STOP (K + 1). In pairwise mode every (prev, cur)
// pair with prev in [0, K] (K standing for START) owns row prev * K + cur of
// `pair_weight` and `pair_bias`, the weights acting on the pre-CRF features.
struct CrfParameters {
  int labels = 0;
  bool pairwise = false;
  Mat transition;
  Mat pair_weight;
  Mat pair_bias;

  int start_index() const { return labels; }
  int stop_index() const { return labels + 1; }
  int pair_row(int prev, int cur) const { return prev * labels + cur; }

  static CrfParameters decomposed(int labels);
  static CrfParameters with_pairwise(int labels, int feature_dim);
};

// Transition matrix with -inf into START, out of STOP and START -> STOP.
Mat structural_transitions(int labels);

// `inputs` is the emission matrix in decomposed mode and the pre-CRF feature
// matrix in pairwise mode; either way one row per token.
ScoreTable build_score_table(const Mat& inputs, const CrfParameters& crf);

// Chains a table-shaped gradient back to the inputs and CRF parameters.
// Gradient arguments are accumulated into; pass null to skip one.
void score_table_backward(const ScoreTable& d_table, const Mat& inputs, const CrfParameters& crf,
                          Mat* d_inputs, Mat* d_transition, Mat* d_pair_weight, Mat* d_pair_bias);

double crf_sequence_score(const Mat& inputs, const CrfParameters& crf, std::span<const int> labels);
double crf_log_partition(const Mat& inputs, const CrfParameters& crf);

struct LabeledInputs {
  Mat inputs;
  std::vector<int> labels;
};

double crf_neg_log_likelihood(std::span<const LabeledInputs> batch, const CrfParameters& crf);
ViterbiPath viterbi_decode(const Mat& inputs, const CrfParameters& crf);

// Gradient of log Z - score(gold) with respect to the table entries.
ScoreTable nll_table_gradient(const ScoreTable& table, std::span<const int> gold, double* nll);

}  // namespace flexner
