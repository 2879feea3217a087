#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flexner/corpus.hpp"

namespace flexner {

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
};

struct RunSummary {
  std::vector<double> micro_f1;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single run
};

struct ScoreReport {
  std::map<std::string, ClassScore> per_class;
  ClassScore micro;
  std::optional<RunSummary> runs;
};

// Precision/recall/F1 from counts; 0 whenever a denominator is 0.
ClassScore score_from_counts(std::size_t gold, std::size_t predicted, std::size_t correct);

// Exact-match (class, start, end) scoring. Predicted sequences are read in
// `predicted_scheme`, leniently by default.
ScoreReport score_entities(const Corpus& gold, const std::vector<std::vector<std::string>>& predicted,
                           TagScheme predicted_scheme, Repair repair = Repair::kLenient);
ScoreReport score_entities(const Corpus& gold, const Corpus& predicted,
                           Repair repair = Repair::kLenient);

ScoreReport aggregate_runs(const std::vector<ScoreReport>& reports);

void print_report_table(std::ostream& out, const ScoreReport& report);
// key=value lines, fixed four-decimal formatting.
void print_report_metrics(std::ostream& out, const ScoreReport& report,
                          const std::string& prefix = "");

}  // namespace flexner
