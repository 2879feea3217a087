#include "flexner/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <tuple>

namespace flexner {

ClassScore score_from_counts(std::size_t gold, std::size_t predicted, std::size_t correct) {
  ClassScore s;
  s.gold = gold;
  s.predicted = predicted;
  s.correct = correct;
  s.precision = predicted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(predicted);
  s.recall = gold == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(gold);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0
                                       : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

ScoreReport score_entities(const Corpus& gold, const std::vector<std::vector<std::string>>& predicted,
                           TagScheme predicted_scheme, Repair repair) {
  if (gold.size() != predicted.size()) {
    throw Error("gold has " + std::to_string(gold.size()) + " sentences but predictions have " +
                std::to_string(predicted.size()));
  }
  struct Counts {
    std::size_t gold = 0, predicted = 0, correct = 0;
  };
  std::map<std::string, Counts> counts;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Sentence& g = gold.sentences[i];
    if (g.labels.size() != predicted[i].size()) {
      throw Error("sentence " + std::to_string(i) + ": gold has " + std::to_string(g.labels.size()) +
                  " tokens but the prediction has " + std::to_string(predicted[i].size()));
    }
    const auto gold_mentions = extract_spans(g.labels, g.scheme, Repair::kStrict).mentions;
    const auto pred_mentions = extract_spans(predicted[i], predicted_scheme, repair).mentions;
    std::set<std::tuple<std::string, std::size_t, std::size_t>> gold_set;
    for (const auto& m : gold_mentions) {
      ++counts[m.entity_class].gold;
      gold_set.emplace(m.entity_class, m.start, m.end);
    }
    for (const auto& m : pred_mentions) {
      auto& c = counts[m.entity_class];
      ++c.predicted;
      if (gold_set.count({m.entity_class, m.start, m.end})) ++c.correct;
    }
  }
  ScoreReport report;
  Counts total;
  for (const auto& [cls, c] : counts) {
    report.per_class[cls] = score_from_counts(c.gold, c.predicted, c.correct);
    total.gold += c.gold;
    total.predicted += c.predicted;
    total.correct += c.correct;
  }
  report.micro = score_from_counts(total.gold, total.predicted, total.correct);
  return report;
}

ScoreReport score_entities(const Corpus& gold, const Corpus& predicted, Repair repair) {
  std::vector<std::vector<std::string>> labels;
  labels.reserve(predicted.size());
  for (const auto& s : predicted.sentences) labels.push_back(s.labels);
  return score_entities(gold, labels, predicted.scheme, repair);
}

ScoreReport aggregate_runs(const std::vector<ScoreReport>& reports) {
  if (reports.empty()) throw Error("aggregate_runs needs at least one report");
  const double n = static_cast<double>(reports.size());
  ScoreReport out;
  RunSummary runs;
  for (const auto& r : reports) runs.micro_f1.push_back(r.micro.f1);
  // Summation in sorted order keeps the result independent of run order.
  std::vector<double> sorted = runs.micro_f1;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  runs.mean = sum / n;
  if (reports.size() > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - runs.mean) * (v - runs.mean);
    runs.std = std::sqrt(ss / (n - 1.0));
  }

  auto mean_of = [&](auto field_of) {
    std::vector<double> values;
    for (const auto& r : reports) values.push_back(field_of(r));
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) s += v;
    return s / n;
  };
  out.micro.precision = mean_of([](const ScoreReport& r) { return r.micro.precision; });
  out.micro.recall = mean_of([](const ScoreReport& r) { return r.micro.recall; });
  out.micro.f1 = runs.mean;
  std::set<std::string> classes;
  for (const auto& r : reports) {
    for (const auto& [cls, _] : r.per_class) classes.insert(cls);
  }
  for (const auto& cls : classes) {
    auto field = [&](auto member) {
      return mean_of([&](const ScoreReport& r) {
        auto it = r.per_class.find(cls);
        return it == r.per_class.end() ? 0.0 : member(it->second);
      });
    };
    ClassScore c;
    c.precision = field([](const ClassScore& s) { return s.precision; });
    c.recall = field([](const ClassScore& s) { return s.recall; });
    c.f1 = field([](const ClassScore& s) { return s.f1; });
    for (const auto& r : reports) {
      auto it = r.per_class.find(cls);
      if (it == r.per_class.end()) continue;
      c.gold += it->second.gold;
      c.predicted += it->second.predicted;
      c.correct += it->second.correct;
    }
    out.per_class[cls] = c;
  }
  out.runs = std::move(runs);
  return out;
}

void print_report_table(std::ostream& out, const ScoreReport& report) {
  const auto flags = out.flags();
  out << std::left << std::setw(10) << "class" << std::right << std::setw(10) << "precision"
      << std::setw(10) << "recall" << std::setw(10) << "f1" << std::setw(8) << "gold"
      << std::setw(8) << "pred" << std::setw(8) << "correct" << '\n';
  auto row = [&](const std::string& name, const ClassScore& s) {
    out << std::left << std::setw(10) << name << std::right << std::fixed << std::setprecision(4)
        << std::setw(10) << s.precision << std::setw(10) << s.recall << std::setw(10) << s.f1
        << std::setw(8) << s.gold << std::setw(8) << s.predicted << std::setw(8) << s.correct
        << '\n';
  };
  for (const auto& [cls, s] : report.per_class) row(cls, s);
  ClassScore micro = report.micro;
  if (micro.gold == 0 && micro.predicted == 0) {
    for (const auto& [_, s] : report.per_class) {
      micro.gold += s.gold;
      micro.predicted += s.predicted;
      micro.correct += s.correct;
    }
  }
  row("micro", micro);
  if (report.runs) {
    out << "runs=" << report.runs->micro_f1.size() << " micro_f1 " << std::fixed
        << std::setprecision(4) << report.runs->mean << " +/- " << report.runs->std << '\n';
  }
  out.flags(flags);
}

void print_report_metrics(std::ostream& out, const ScoreReport& report, const std::string& prefix) {
  const auto flags = out.flags();
  out << std::fixed << std::setprecision(4);
  for (const auto& [cls, s] : report.per_class) {
    out << prefix << "class=" << cls << " precision=" << s.precision << " recall=" << s.recall
        << " f1=" << s.f1 << " gold=" << s.gold << " predicted=" << s.predicted
        << " correct=" << s.correct << '\n';
  }
  out << prefix << "micro_precision=" << report.micro.precision << '\n';
  out << prefix << "micro_recall=" << report.micro.recall << '\n';
  out << prefix << "micro_f1=" << report.micro.f1 << '\n';
  if (report.runs) {
    out << prefix << "runs=" << report.runs->micro_f1.size() << '\n';
    out << prefix << "micro_f1_mean=" << report.runs->mean << '\n';
    out << prefix << "micro_f1_std=" << report.runs->std << '\n';
  }
  out.flags(flags);
}

}  // namespace flexner
