#include "relunfa/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace relunfa {

double student_t_975(int df) {
  static constexpr double kTable[] = {12.706205, 4.302653, 3.182446, 2.776445, 2.570582,
                                      2.446912,  2.364624, 2.306004, 2.262157};
  if (df < 1 || df > 9) {
    throw std::out_of_range("student_t_975: table covers df 1..9 (2..10 scores)");
  }
  return kTable[df - 1];
}

StatSummary summarize(const std::vector<double>& scores) {
  if (scores.empty()) throw std::invalid_argument("summarize: no scores");
  StatSummary summary;
  summary.per_seed = scores;
  double sum = 0.0;
  for (double x : scores) sum += x;
  const int count = static_cast<int>(scores.size());
  summary.mean = sum / count;
  if (count == 1) {
    summary.degenerate = true;
    return summary;
  }
  double sq = 0.0;
  for (double x : scores) sq += (x - summary.mean) * (x - summary.mean);
  summary.std_dev = std::sqrt(sq / (count - 1));
  const double half = student_t_975(count - 1) * summary.std_dev / std::sqrt(count);
  summary.ci95 = std::make_pair(summary.mean - half, summary.mean + half);
  return summary;
}

}  // namespace relunfa
