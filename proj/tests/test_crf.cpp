#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "flexner/crf.hpp"
#include "support.hpp"

using namespace flexner;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Direct re-summation of a labeling's score, without the score table.
double oracle_score(const Mat& in, const CrfParameters& crf, const std::vector<int>& y) {
  const int K = crf.labels;
  double s = 0.0;
  if (crf.pairwise) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const int prev = i == 0 ? K : y[i - 1];
      const int row = prev * K + y[i];
      s += crf.pair_weight.row(row).dot(in.row(static_cast<Eigen::Index>(i))) + crf.pair_bias(row, 0);
    }
    return s;
  }
  int prev = K;
  for (std::size_t i = 0; i < y.size(); ++i) {
    s += in(static_cast<Eigen::Index>(i), y[i]) + crf.transition(prev, y[i]);
    prev = y[i];
  }
  return s + crf.transition(prev, K + 1);
}

struct Enumeration {
  double log_z = kNegInf;
  double best = kNegInf;
  std::vector<int> argmax;
};

Enumeration enumerate(const Mat& in, const CrfParameters& crf) {
  const int n = static_cast<int>(in.rows());
  const int K = crf.labels;
  Enumeration e;
  std::vector<int> y(static_cast<std::size_t>(n), 0);
  std::vector<double> scores;
  while (true) {
    const double s = oracle_score(in, crf, y);
    scores.push_back(s);
    if (s > e.best) {
      e.best = s;
      e.argmax = y;
    }
    int pos = n - 1;
    while (pos >= 0 && ++y[static_cast<std::size_t>(pos)] == K) y[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
  }
  double m = kNegInf;
  for (double s : scores) m = std::max(m, s);
  double acc = 0.0;
  for (double s : scores) acc += std::exp(s - m);
  e.log_z = m + std::log(acc);
  return e;
}

CrfParameters random_crf(std::mt19937_64& rng, int K, int D, bool pairwise) {
  std::normal_distribution<double> g(0.0, 1.0);
  if (pairwise) {
    CrfParameters crf = CrfParameters::with_pairwise(K, D);
    for (Eigen::Index i = 0; i < crf.pair_weight.size(); ++i) crf.pair_weight.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < crf.pair_bias.size(); ++i) crf.pair_bias.data()[i] = g(rng);
    return crf;
  }
  CrfParameters crf = CrfParameters::decomposed(K);
  for (int a = 0; a < K + 2; ++a) {
    for (int b = 0; b < K + 2; ++b) {
      if (std::isfinite(crf.transition(a, b))) crf.transition(a, b) = g(rng);
    }
  }
  return crf;
}

Mat random_inputs(std::mt19937_64& rng, int n, int cols) {
  std::normal_distribution<double> g(0.0, 1.5);
  Mat m(n, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

}  // namespace

TEST(CrfParameters, StructuralEntries) {
  const CrfParameters crf = CrfParameters::decomposed(3);
  ASSERT_EQ(crf.transition.rows(), 5);
  for (int a = 0; a < 5; ++a) {
    EXPECT_EQ(crf.transition(a, crf.start_index()), kNegInf);
    EXPECT_EQ(crf.transition(crf.stop_index(), a), kNegInf);
  }
  EXPECT_EQ(crf.transition(crf.start_index(), crf.stop_index()), kNegInf);
  for (int a = 0; a < 3; ++a) {
    EXPECT_EQ(crf.transition(crf.start_index(), a), 0.0);
    EXPECT_EQ(crf.transition(a, crf.stop_index()), 0.0);
    for (int b = 0; b < 3; ++b) EXPECT_EQ(crf.transition(a, b), 0.0);
  }
}

TEST(CrfSequenceScore, LengthOneUnrolled) {
  std::mt19937_64 rng(1);
  const CrfParameters crf = random_crf(rng, 4, 0, false);
  const Mat e = random_inputs(rng, 1, 4);
  for (int k = 0; k < 4; ++k) {
    const std::vector<int> y{k};
    EXPECT_NEAR(crf_sequence_score(e, crf, y),
                e(0, k) + crf.transition(crf.start_index(), k) + crf.transition(k, crf.stop_index()),
                1e-12);
  }
}

TEST(CrfSequenceScore, ZeroParametersScoreZero) {
  const CrfParameters crf = CrfParameters::decomposed(3);
  const Mat e = Mat::Zero(4, 3);
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> k(0, 2);
  for (int t = 0; t < 20; ++t) {
    std::vector<int> y{k(rng), k(rng), k(rng), k(rng)};
    EXPECT_EQ(crf_sequence_score(e, crf, y), 0.0);
  }
}

TEST(CrfSequenceScore, MatchesResummationOracle) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> k(0, 4);
  for (bool pairwise : {false, true}) {
    const CrfParameters crf = random_crf(rng, 5, 3, pairwise);
    const Mat in = random_inputs(rng, 4, pairwise ? 3 : 5);
    std::vector<int> y{k(rng), k(rng), k(rng), k(rng)};
    EXPECT_NEAR(crf_sequence_score(in, crf, y), oracle_score(in, crf, y), 1e-10);
  }
}

TEST(CrfSequenceScore, Errors) {
  const CrfParameters crf = CrfParameters::decomposed(3);
  const Mat e = Mat::Zero(2, 3);
  const std::vector<int> bad_label{0, 3};
  const std::vector<int> bad_length{0};
  EXPECT_THROW(crf_sequence_score(e, crf, bad_label), Error);
  EXPECT_THROW(crf_sequence_score(e, crf, bad_length), Error);
  const std::vector<int> negative{-1, 0};
  EXPECT_THROW(crf_sequence_score(e, crf, negative), Error);
}

TEST(CrfLogPartition, LengthOne) {
  for (int K : {1, 2, 5}) {
    EXPECT_NEAR(crf_log_partition(Mat::Zero(1, K), CrfParameters::decomposed(K)), std::log(K), 1e-12);
  }
  std::mt19937_64 rng(4);
  const CrfParameters crf = random_crf(rng, 3, 0, false);
  const Mat e = random_inputs(rng, 1, 3);
  std::vector<double> terms;
  for (int k = 0; k < 3; ++k) {
    terms.push_back(e(0, k) + crf.transition(3, k) + crf.transition(k, 4));
  }
  EXPECT_NEAR(crf_log_partition(e, crf), log_sum_exp(terms), 1e-12);
}

TEST(CrfLogPartition, ExhaustiveOracle) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(1, 6);
  std::uniform_int_distribution<int> labels(1, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const bool pairwise = trial % 2 == 1;
    const int K = labels(rng);
    const int n = len(rng);
    const CrfParameters crf = random_crf(rng, K, 2, pairwise);
    const Mat in = random_inputs(rng, n, pairwise ? 2 : K);
    const Enumeration e = enumerate(in, crf);
    ASSERT_NEAR(crf_log_partition(in, crf), e.log_z, 1e-6);
    const ViterbiPath v = viterbi_decode(in, crf);
    ASSERT_NEAR(v.score, e.best, 1e-9);
    ASSERT_NEAR(oracle_score(in, crf, v.labels), v.score, 1e-9);
    ASSERT_LE(v.score, e.log_z + 1e-12);
  }
}

TEST(CrfNegLogLikelihood, Examples) {
  const CrfParameters crf = CrfParameters::decomposed(4);
  std::vector<LabeledInputs> batch{{Mat::Zero(1, 4), {2}}};
  EXPECT_NEAR(crf_neg_log_likelihood(batch, crf), std::log(4.0), 1e-12);

  std::mt19937_64 rng(6);
  const CrfParameters r = random_crf(rng, 3, 0, false);
  LabeledInputs one{random_inputs(rng, 4, 3), {0, 1, 2, 1}};
  std::vector<LabeledInputs> single{one};
  std::vector<LabeledInputs> twice{one, one};
  EXPECT_NEAR(crf_neg_log_likelihood(twice, r), 2.0 * crf_neg_log_likelihood(single, r), 1e-10);
  EXPECT_THROW(crf_neg_log_likelihood(std::span<const LabeledInputs>{}, r), Error);
}

TEST(CrfNegLogLikelihood, EnumerationOracleAndPositivity) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> k(0, 3);
  for (bool pairwise : {false, true}) {
    const CrfParameters crf = random_crf(rng, 4, 3, pairwise);
    std::vector<LabeledInputs> batch;
    double expected = 0.0;
    for (int j = 0; j < 3; ++j) {
      LabeledInputs li{random_inputs(rng, 1 + j, pairwise ? 3 : 4), {}};
      for (int i = 0; i <= j; ++i) li.labels.push_back(k(rng));
      expected += enumerate(li.inputs, crf).log_z - oracle_score(li.inputs, crf, li.labels);
      batch.push_back(li);
    }
    const double nll = crf_neg_log_likelihood(batch, crf);
    EXPECT_NEAR(nll, expected, 1e-6);
    EXPECT_GT(nll, 0.0);
  }
}

TEST(Viterbi, LengthOneArgmax) {
  std::mt19937_64 rng(8);
  const CrfParameters crf = random_crf(rng, 5, 0, false);
  const Mat e = random_inputs(rng, 1, 5);
  int best = 0;
  double best_s = kNegInf;
  for (int k = 0; k < 5; ++k) {
    const double s = e(0, k) + crf.transition(5, k) + crf.transition(k, 6);
    if (s > best_s) {
      best_s = s;
      best = k;
    }
  }
  EXPECT_EQ(viterbi_decode(e, crf).labels, (std::vector<int>{best}));
}

TEST(Viterbi, SelfLoopsOnlyGivesConstantLabel) {
  std::mt19937_64 rng(9);
  CrfParameters crf = CrfParameters::decomposed(4);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) crf.transition(a, b) = a == b ? 0.5 : kNegInf;
  }
  for (int t = 0; t < 20; ++t) {
    const auto v = viterbi_decode(random_inputs(rng, 6, 4), crf);
    for (int l : v.labels) EXPECT_EQ(l, v.labels[0]);
  }
}

TEST(Viterbi, TiesBreakTowardLowestIndex) {
  const CrfParameters crf = CrfParameters::decomposed(3);
  EXPECT_EQ(viterbi_decode(Mat::Zero(4, 3), crf).labels, (std::vector<int>{0, 0, 0, 0}));
  Mat e = Mat::Zero(2, 3);
  e(1, 2) = 1.0;
  e(1, 1) = 1.0;
  EXPECT_EQ(viterbi_decode(e, crf).labels, (std::vector<int>{0, 1}));
}

TEST(ForwardBackward, MarginalsAreDistributions) {
  std::mt19937_64 rng(10);
  const CrfParameters crf = random_crf(rng, 4, 0, false);
  const ScoreTable t = build_score_table(random_inputs(rng, 5, 4), crf);
  const Posteriors p = forward_backward(t);
  EXPECT_NEAR(p.log_partition, log_partition(t), 1e-10);
  EXPECT_NEAR(p.marginals.start.sum(), 1.0, 1e-10);
  EXPECT_NEAR(p.marginals.stop.sum(), 1.0, 1e-10);
  for (const auto& m : p.marginals.pair) {
    EXPECT_NEAR(m.sum(), 1.0, 1e-10);
    EXPECT_GE(m.minCoeff(), 0.0);
  }
}

TEST(CrfGradient, TableGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (bool pairwise : {false, true}) {
    CrfParameters crf = random_crf(rng, 3, 2, pairwise);
    Mat in = random_inputs(rng, 4, pairwise ? 2 : 3);
    const std::vector<int> gold{0, 2, 1, 1};
    const auto loss = [&](const Mat& x, const CrfParameters& c) {
      std::vector<LabeledInputs> b{{x, gold}};
      return crf_neg_log_likelihood(b, c);
    };
    double nll = 0.0;
    const ScoreTable table = build_score_table(in, crf);
    const ScoreTable d = nll_table_gradient(table, gold, &nll);
    EXPECT_NEAR(nll, loss(in, crf), 1e-10);
    Mat d_in = Mat::Zero(in.rows(), in.cols());
    Mat d_tr = pairwise ? Mat() : Mat::Zero(crf.transition.rows(), crf.transition.cols());
    Mat d_w = pairwise ? Mat::Zero(crf.pair_weight.rows(), crf.pair_weight.cols()) : Mat();
    Mat d_b = pairwise ? Mat::Zero(crf.pair_bias.rows(), crf.pair_bias.cols()) : Mat();
    score_table_backward(d, in, crf, &d_in, pairwise ? nullptr : &d_tr, pairwise ? &d_w : nullptr,
                         pairwise ? &d_b : nullptr);
    const double h = 1e-4;
    for (Eigen::Index i = 0; i < in.size(); ++i) {
      Mat p = in, m = in;
      p.data()[i] += h;
      m.data()[i] -= h;
      const double num = (loss(p, crf) - loss(m, crf)) / (2 * h);
      EXPECT_TRUE(flexner::testing::close_rel(d_in.data()[i], num, 1e-4)) << d_in.data()[i] << " " << num;
    }
    Mat* target = pairwise ? &crf.pair_weight : &crf.transition;
    const Mat& analytic = pairwise ? d_w : d_tr;
    for (Eigen::Index i = 0; i < target->size(); ++i) {
      if (!std::isfinite(target->data()[i])) continue;
      const double keep = target->data()[i];
      target->data()[i] = keep + h;
      const double lp = loss(in, crf);
      target->data()[i] = keep - h;
      const double lm = loss(in, crf);
      target->data()[i] = keep;
      EXPECT_TRUE(flexner::testing::close_rel(analytic.data()[i], (lp - lm) / (2 * h), 1e-4));
    }
    if (pairwise) {
      for (Eigen::Index i = 0; i < crf.pair_bias.size(); ++i) {
        const double keep = crf.pair_bias.data()[i];
        crf.pair_bias.data()[i] = keep + h;
        const double lp = loss(in, crf);
        crf.pair_bias.data()[i] = keep - h;
        const double lm = loss(in, crf);
        crf.pair_bias.data()[i] = keep;
        EXPECT_TRUE(flexner::testing::close_rel(d_b.data()[i], (lp - lm) / (2 * h), 1e-4));
      }
    }
  }
}
