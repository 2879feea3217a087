#include <gtest/gtest.h>

#include <random>

#include "flexner/layers.hpp"
#include "gradcheck.hpp"

using namespace flexner;
using flexner::testing::check_gradients;

namespace {

Mat random_mat(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

}  // namespace

TEST(Conv, HandComputedSingleFilter) {
  ParameterStore store;
  const ConvLayer conv = ConvLayer::create(store, "c", ParamGroup::kLeft, 1, 1, 3, Activation::kLinear);
  store.value(conv.weight) << 1.0, 10.0, 100.0;
  Mat x(3, 1);
  x << 1.0, 2.0, 3.0;
  const Mat y = conv_forward(store, conv, x, nullptr);
  ASSERT_EQ(y.rows(), 3);
  EXPECT_DOUBLE_EQ(y(0, 0), 210.0);
  EXPECT_DOUBLE_EQ(y(1, 0), 321.0);
  EXPECT_DOUBLE_EQ(y(2, 0), 32.0);
  MaxPoolCache pool;
  EXPECT_DOUBLE_EQ(max_over_time(y, &pool)(0), 321.0);
  EXPECT_EQ(pool.argmax[0], 1);
}

TEST(Conv, TwoCharacterToyKernelMaxPool) {
  // Two characters with 2-d embeddings, two filters of width 3, bias (0.5, -1).
  ParameterStore store;
  const ConvLayer conv = ConvLayer::create(store, "c", ParamGroup::kLeft, 2, 2, 3, Activation::kLinear);
  store.value(conv.weight) << 1, 0, 2, 1, 0, -1,
                              0, 1, 1, 0, 3, 0;
  store.value(conv.bias) << 0.5, -1.0;
  Mat x(2, 2);
  x << 1, 2,
       3, 4;
  // Filter 0, t=0: [0 0]*[1 0] + [1 2]*[2 1] + [3 4]*[0 -1] + 0.5 = 0 + 4 - 4 + 0.5 = 0.5
  //           t=1: [1 2]*[1 0] + [3 4]*[2 1] + 0 + 0.5        = 1 + 10 + 0.5   = 11.5
  // Filter 1, t=0: 0 + [1 2]*[1 0] + [3 4]*[3 0] - 1          = 1 + 9 - 1      = 9
  //           t=1: [1 2]*[0 1] + [3 4]*[1 0] + 0 - 1          = 2 + 3 - 1      = 4
  const Mat y = conv_forward(store, conv, x, nullptr);
  EXPECT_DOUBLE_EQ(y(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(y(1, 0), 11.5);
  EXPECT_DOUBLE_EQ(y(0, 1), 9.0);
  EXPECT_DOUBLE_EQ(y(1, 1), 4.0);
  const Vec pooled = max_over_time(y, nullptr);
  EXPECT_DOUBLE_EQ(pooled(0), 11.5);
  EXPECT_DOUBLE_EQ(pooled(1), 9.0);
}

TEST(Conv, EvenWidthRejected) {
  ParameterStore store;
  EXPECT_THROW(ConvLayer::create(store, "c", ParamGroup::kLeft, 2, 2, 2, Activation::kLinear), Error);
}

TEST(Conv, ActivationsApplied) {
  ParameterStore store;
  const ConvLayer relu = ConvLayer::create(store, "r", ParamGroup::kLeft, 1, 1, 1, Activation::kRelu);
  const ConvLayer tanh = ConvLayer::create(store, "t", ParamGroup::kLeft, 1, 1, 1, Activation::kTanh);
  store.value(relu.weight)(0, 0) = 1.0;
  store.value(tanh.weight)(0, 0) = 1.0;
  Mat x(2, 1);
  x << -2.0, 0.5;
  const Mat r = conv_forward(store, relu, x, nullptr);
  EXPECT_EQ(r(0, 0), 0.0);
  EXPECT_EQ(r(1, 0), 0.5);
  const Mat t = conv_forward(store, tanh, x, nullptr);
  EXPECT_DOUBLE_EQ(t(0, 0), std::tanh(-2.0));
}

TEST(Conv, GradientsAllActivations) {
  std::mt19937_64 rng(3);
  for (auto act : {Activation::kLinear, Activation::kTanh, Activation::kRelu}) {
    ParameterStore store;
    const ConvStack stack = ConvStack::create(store, "s", ParamGroup::kLeft, 3, 4, 3, 2, act);
    store.initialize(5);
    Mat x = random_mat(rng, 5, 3);
    const Mat R = random_mat(rng, 5, 4);
    ConvStackCache cache;
    conv_stack_forward(store, stack, x, &cache);
    Gradients grads(store);
    const Mat dx = conv_stack_backward(store, stack, cache, R, &grads);
    const auto loss = [&] { return (conv_stack_forward(store, stack, x, nullptr).array() * R.array()).sum(); };
    std::vector<std::size_t> all;
    for (std::size_t i = 0; i < store.size(); ++i) all.push_back(i);
    const auto r = check_gradients(store, grads, all, loss);
    EXPECT_EQ(r.failures, 0u) << activation_name(act) << ": " << r.first_failure;
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double keep = x.data()[i];
      x.data()[i] = keep + h;
      const double lp = loss();
      x.data()[i] = keep - h;
      const double lm = loss();
      x.data()[i] = keep;
      EXPECT_NEAR(dx.data()[i], (lp - lm) / (2 * h), 1e-5);
    }
  }
}

TEST(Lstm, ShapesAndDirections) {
  std::mt19937_64 rng(1);
  ParameterStore store;
  const BiLstmLayer layer = BiLstmLayer::create(store, "b", ParamGroup::kLeft, 3, 4);
  store.initialize(2);
  const Mat x = random_mat(rng, 6, 3);
  const Mat y = bilstm_forward(store, layer, x, nullptr);
  ASSERT_EQ(y.rows(), 6);
  ASSERT_EQ(y.cols(), 8);
  // The backward direction's state at position 5 sees only the last input.
  const Mat tail = lstm_forward(store, layer.backward, x.bottomRows(1), false, nullptr);
  EXPECT_TRUE(y.block(5, 4, 1, 4).isApprox(tail));
  // The forward direction's state at position 0 sees only the first input.
  const Mat head = lstm_forward(store, layer.forward, x.topRows(1), false, nullptr);
  EXPECT_TRUE(y.block(0, 0, 1, 4).isApprox(head));
}

TEST(Lstm, ForgetGateBiasStartsAtOne) {
  ParameterStore store;
  const LstmLayer l = LstmLayer::create(store, "l", ParamGroup::kLeft, 2, 3);
  store.initialize(1);
  const Mat& b = store.value(l.bias);
  for (int i = 0; i < 12; ++i) EXPECT_EQ(b(i, 0), (i >= 3 && i < 6) ? 1.0 : 0.0);
}

TEST(Lstm, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  ParameterStore store;
  const BiLstmLayer layer = BiLstmLayer::create(store, "b", ParamGroup::kLeft, 3, 4);
  store.initialize(9);
  Mat x = random_mat(rng, 5, 3);
  const Mat R = random_mat(rng, 5, 8);
  BiLstmCache cache;
  bilstm_forward(store, layer, x, &cache);
  Gradients grads(store);
  const Mat dx = bilstm_backward(store, layer, cache, R, &grads);
  const auto loss = [&] { return (bilstm_forward(store, layer, x, nullptr).array() * R.array()).sum(); };
  const auto r = check_gradients(store, grads, {0, 1, 2, 3}, loss, 60);
  EXPECT_EQ(r.failures, 0u) << r.first_failure;
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + h;
    const double lp = loss();
    x.data()[i] = keep - h;
    const double lm = loss();
    x.data()[i] = keep;
    EXPECT_NEAR(dx.data()[i], (lp - lm) / (2 * h), 1e-6);
  }
}

TEST(MaxPool, TiesGoToEarliestRowAndBackwardRoutes) {
  Mat x(3, 2);
  x << 1, 5,
       4, 5,
       4, 2;
  MaxPoolCache cache;
  const Vec y = max_over_time(x, &cache);
  EXPECT_EQ(y(0), 4.0);
  EXPECT_EQ(cache.argmax[0], 1);
  EXPECT_EQ(cache.argmax[1], 0);
  Vec d(2);
  d << 2.0, 3.0;
  const Mat dx = max_over_time_backward(cache, d);
  Mat expected = Mat::Zero(3, 2);
  expected(1, 0) = 2.0;
  expected(0, 1) = 3.0;
  EXPECT_EQ(dx, expected);
}

TEST(Embedding, LookupAndSparseGradient) {
  ParameterStore store;
  const std::size_t t = store.add("emb", ParamGroup::kLeft, 5, 2, Init::kEmbedding, true);
  store.initialize(3);
  const std::vector<int> ids{1, 3, 1};
  const Mat rows = embedding_lookup(store, t, ids);
  EXPECT_EQ(rows.row(1), store.value(t).row(3));
  Gradients grads(store);
  Mat d(3, 2);
  d << 1, 2,
       3, 4,
       5, 6;
  embedding_backward(t, ids, d, &grads);
  const Mat g = grads.to_dense(t);
  EXPECT_EQ(g(1, 0), 6.0);
  EXPECT_EQ(g(1, 1), 8.0);
  EXPECT_EQ(g(3, 0), 3.0);
  EXPECT_EQ(g(0, 0), 0.0);
  EXPECT_THROW(embedding_lookup(store, t, {7}), Error);
}

TEST(Dropout, InvertedMaskStatistics) {
  std::mt19937_64 rng(1);
  EXPECT_EQ(dropout_mask(3, 3, 0.5, nullptr), Mat::Ones(3, 3));
  EXPECT_EQ(dropout_mask(3, 3, 0.0, &rng), Mat::Ones(3, 3));
  const Mat m = dropout_mask(200, 200, 0.25, &rng);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    ASSERT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-12);
  }
  EXPECT_NEAR(m.mean(), 1.0, 0.02);
}

TEST(ParameterStore, ChecksumAndGroups) {
  ParameterStore store;
  const std::size_t a = store.add("a", ParamGroup::kLeft, 2, 2, Init::kUniformFanIn);
  store.add("b", ParamGroup::kRight, 2, 2, Init::kUniformFanIn);
  EXPECT_THROW(store.add("a", ParamGroup::kLeft, 1, 1, Init::kZero), Error);
  store.initialize(1);
  const auto left = store.checksum({ParamGroup::kLeft});
  const auto right = store.checksum({ParamGroup::kRight});
  store.value(a)(0, 0) += 1e-9;
  EXPECT_NE(store.checksum({ParamGroup::kLeft}), left);
  EXPECT_EQ(store.checksum({ParamGroup::kRight}), right);
  ParameterStore again;
  again.add("a", ParamGroup::kLeft, 2, 2, Init::kUniformFanIn);
  again.add("b", ParamGroup::kRight, 2, 2, Init::kUniformFanIn);
  again.initialize(1);
  EXPECT_EQ(again.checksum({ParamGroup::kRight}), right);
  EXPECT_EQ(again.find("b"), 1u);
  EXPECT_EQ(again.find("zzz"), again.size());
}

TEST(ParameterStore, UniformInitRange) {
  ParameterStore store;
  const std::size_t w = store.add("w", ParamGroup::kLeft, 50, 12, Init::kUniformFanIn);
  store.initialize(4);
  const double r = std::sqrt(3.0 / 12.0);
  EXPECT_LE(store.value(w).cwiseAbs().maxCoeff(), r);
  EXPECT_GT(store.value(w).cwiseAbs().maxCoeff(), 0.8 * r);
}

TEST(Gradients, AccumulateAndNorm) {
  ParameterStore store;
  const std::size_t d = store.add("d", ParamGroup::kLeft, 2, 2, Init::kZero);
  const std::size_t s = store.add("s", ParamGroup::kRight, 4, 2, Init::kZero, true);
  Gradients a(store);
  Gradients b(store);
  a.dense(d).setConstant(1.0);
  b.dense(d).setConstant(2.0);
  b.row(s, 2) << 3.0, 4.0;
  a.accumulate(b);
  EXPECT_EQ(a.to_dense(d), Mat::Constant(2, 2, 3.0));
  EXPECT_EQ(a.to_dense(s)(2, 1), 4.0);
  EXPECT_DOUBLE_EQ(a.squared_norm(GroupMask::all(), store), 36.0 + 25.0);
  EXPECT_DOUBLE_EQ(a.squared_norm({ParamGroup::kRight}, store), 25.0);
  a.scale(0.5);
  EXPECT_EQ(a.to_dense(d)(0, 0), 1.5);
}
