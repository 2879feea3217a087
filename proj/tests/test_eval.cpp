#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "flexner/eval.hpp"
#include "support.hpp"

using namespace flexner;

namespace {

std::vector<std::vector<std::string>> labels_of(const Corpus& c) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : c.sentences) out.push_back(s.labels);
  return out;
}

Corpus two_loc_gold() {
  Corpus g;
  g.sentences.push_back(make_sentence({"Germany", "beat", "Britain", "and", "Bob"},
                                      {"B-LOC", "O", "B-LOC", "O", "O"}, TagScheme::kIob2));
  return g;
}

}  // namespace

TEST(ScoreEntities, PerfectPrediction) {
  const Corpus g = flexner::testing::toy_corpus();
  const ScoreReport r = score_entities(g, labels_of(g), TagScheme::kIob2);
  EXPECT_EQ(r.micro.precision, 1.0);
  EXPECT_EQ(r.micro.recall, 1.0);
  EXPECT_EQ(r.micro.f1, 1.0);
  for (const auto& [cls, s] : r.per_class) {
    EXPECT_EQ(s.f1, 1.0) << cls;
    EXPECT_EQ(s.correct, s.gold);
  }
}

TEST(ScoreEntities, HandCountedExample) {
  const Corpus g = two_loc_gold();
  const std::vector<std::vector<std::string>> pred{{"B-LOC", "O", "O", "O", "B-PER"}};
  const ScoreReport r = score_entities(g, pred, TagScheme::kIob2);
  const ClassScore& loc = r.per_class.at("LOC");
  EXPECT_DOUBLE_EQ(loc.precision, 1.0);
  EXPECT_DOUBLE_EQ(loc.recall, 0.5);
  EXPECT_EQ(loc.gold, 2u);
  EXPECT_EQ(loc.predicted, 1u);
  EXPECT_EQ(loc.correct, 1u);
  const ClassScore& per = r.per_class.at("PER");
  EXPECT_DOUBLE_EQ(per.precision, 0.0);
  EXPECT_EQ(per.gold, 0u);
  EXPECT_DOUBLE_EQ(r.micro.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.micro.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.micro.f1, 0.5);
}

TEST(ScoreEntities, AllOutsidePrediction) {
  const Corpus g = two_loc_gold();
  const std::vector<std::vector<std::string>> pred{{"O", "O", "O", "O", "O"}};
  const ScoreReport r = score_entities(g, pred, TagScheme::kIob2);
  EXPECT_EQ(r.micro.recall, 0.0);
  EXPECT_EQ(r.micro.precision, 0.0);
  EXPECT_EQ(r.micro.f1, 0.0);
}

TEST(ScoreEntities, BoundaryMismatchIsWrong) {
  const Corpus g = flexner::testing::toy_corpus();
  auto pred = labels_of(g);
  pred[0][4] = "O";  // "New York" shortened to "New"
  const ScoreReport r = score_entities(g, pred, TagScheme::kIob2);
  EXPECT_EQ(r.per_class.at("LOC").correct, r.per_class.at("LOC").gold - 1);
}

TEST(ScoreEntities, LengthMismatchNamesSentence) {
  const Corpus g = flexner::testing::toy_corpus();
  auto pred = labels_of(g);
  pred[2].pop_back();
  try {
    score_entities(g, pred, TagScheme::kIob2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("sentence 2"), std::string::npos) << e.what();
  }
  pred = labels_of(g);
  pred.pop_back();
  EXPECT_THROW(score_entities(g, pred, TagScheme::kIob2), Error);
}

TEST(ScoreEntities, LenientRepairAndStrictMode) {
  const Corpus g = two_loc_gold();
  const std::vector<std::vector<std::string>> pred{{"I-LOC", "O", "B-LOC", "O", "O"}};
  const ScoreReport r = score_entities(g, pred, TagScheme::kIob2);
  EXPECT_EQ(r.micro.f1, 1.0);
  EXPECT_THROW(score_entities(g, pred, TagScheme::kIob2, Repair::kStrict), LabelError);
}

TEST(ScoreEntities, CrossSchemePredictions) {
  const Corpus g = flexner::testing::toy_corpus();
  std::vector<std::vector<std::string>> pred;
  for (const auto& s : g.sentences) pred.push_back(convert_sentence(s, TagScheme::kIobes).labels);
  EXPECT_EQ(score_entities(g, pred, TagScheme::kIobes).micro.f1, 1.0);
}

TEST(ScoreEntities, InvariantsOnRandomPredictions) {
  std::mt19937_64 rng(4);
  Corpus g;
  for (int i = 0; i < 60; ++i) g.sentences.push_back(flexner::testing::random_sentence(rng, 7));
  std::vector<std::vector<std::string>> pred;
  for (const auto& s : g.sentences) pred.push_back(flexner::testing::random_iob2(rng, s.size()));
  const ScoreReport r = score_entities(g, pred, TagScheme::kIob2);
  std::map<std::string, std::size_t> gold_counts;
  for (const auto& s : g.sentences) {
    for (const auto& m : extract_entities(s)) ++gold_counts[m.entity_class];
  }
  for (const auto& [cls, s] : r.per_class) {
    EXPECT_LE(s.correct, std::min(s.gold, s.predicted));
    EXPECT_EQ(s.gold, gold_counts[cls]);
    for (double v : {s.precision, s.recall, s.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    if (s.precision + s.recall > 0) {
      EXPECT_NEAR(s.f1, 2 * s.precision * s.recall / (s.precision + s.recall), 1e-12);
    }
  }
  // Reordering sentences leaves micro F1 unchanged.
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Corpus g2;
  std::vector<std::vector<std::string>> p2;
  for (auto i : order) {
    g2.sentences.push_back(g.sentences[i]);
    p2.push_back(pred[i]);
  }
  EXPECT_EQ(score_entities(g2, p2, TagScheme::kIob2).micro.f1, r.micro.f1);
}

TEST(ScoreFromCounts, ZeroDenominators) {
  const ClassScore s = score_from_counts(0, 0, 0);
  EXPECT_EQ(s.precision, 0.0);
  EXPECT_EQ(s.recall, 0.0);
  EXPECT_EQ(s.f1, 0.0);
  const ClassScore t = score_from_counts(4, 2, 1);
  EXPECT_DOUBLE_EQ(t.precision, 0.5);
  EXPECT_DOUBLE_EQ(t.recall, 0.25);
  EXPECT_DOUBLE_EQ(t.f1, 2 * 0.5 * 0.25 / 0.75);
}

TEST(AggregateRuns, MeanAndSampleStd) {
  auto run = [](double f1) {
    ScoreReport r;
    r.micro.f1 = f1;
    r.per_class["LOC"] = ClassScore{f1, f1, f1, 1, 1, 1};
    return r;
  };
  const ScoreReport single = aggregate_runs({run(0.8)});
  EXPECT_EQ(single.runs->std, 0.0);
  EXPECT_EQ(single.runs->mean, 0.8);

  const ScoreReport a = aggregate_runs({run(0.90), run(0.91), run(0.92)});
  EXPECT_NEAR(a.runs->mean, 0.91, 1e-12);
  EXPECT_NEAR(a.runs->std, 0.01, 1e-12);
  EXPECT_NEAR(a.per_class.at("LOC").f1, 0.91, 1e-12);
  const ScoreReport b = aggregate_runs({run(0.92), run(0.90), run(0.91)});
  EXPECT_EQ(a.runs->mean, b.runs->mean);
  EXPECT_EQ(a.runs->std, b.runs->std);
  EXPECT_EQ(a.per_class.at("LOC").f1, b.per_class.at("LOC").f1);
  EXPECT_THROW(aggregate_runs({}), Error);
}

TEST(Report, MachineReadableLines) {
  const Corpus g = two_loc_gold();
  const std::vector<std::vector<std::string>> pred{{"B-LOC", "O", "O", "O", "B-PER"}};
  std::ostringstream out;
  print_report_metrics(out, score_entities(g, pred, TagScheme::kIob2));
  const std::string s = out.str();
  EXPECT_NE(s.find("micro_f1=0.5000\n"), std::string::npos);
  EXPECT_NE(s.find("class=LOC precision=1.0000 recall=0.5000"), std::string::npos);
  std::ostringstream table;
  print_report_table(table, score_entities(g, pred, TagScheme::kIob2));
  EXPECT_NE(table.str().find("micro"), std::string::npos);
}
