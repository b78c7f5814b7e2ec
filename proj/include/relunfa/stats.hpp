#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace relunfa {

struct StatSummary {
  std::vector<double> per_seed;
  double mean = 0.0;
  double std_dev = 0.0;  // sample standard deviation, n-1 denominator
  std::optional<std::pair<double, double>> ci95;
  bool degenerate = false;  // single score: no interval
};

// Two-sided 97.5% quantile of Student's t for df in 1..9 (up to 10 seeds).
double student_t_975(int df);

// Mean, sample std, and the 95% Student-t interval. One score yields a
// degenerate summary with the interval unset; zero variance collapses the
// interval to the mean. Throws on an empty list.
StatSummary summarize(const std::vector<double>& scores);

}  // namespace relunfa
