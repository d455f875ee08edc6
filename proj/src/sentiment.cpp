#include "ssaam/sentiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include <fmt/format.h>

#include "ssaam/error.hpp"

namespace ssaam::sentiment {

namespace {

double type7_quantile(const std::vector<double>& sorted, double p) {
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

Quartiles compute_quartiles(std::span<const double> scores) {
  if (scores.size() < 4)
    throw Error(ErrorCode::TooFewScores, fmt::format("need at least 4 scores, got {}", scores.size()));
  std::vector<double> sorted(scores.begin(), scores.end());
  for (double s : sorted)
    if (!std::isfinite(s)) throw Error(ErrorCode::NonFiniteInput, "score is not finite");
  std::sort(sorted.begin(), sorted.end());
  return {type7_quantile(sorted, 0.25), type7_quantile(sorted, 0.75)};
}

PolarityLabel classify_polarity(double pll, const Quartiles& q) {
  if (pll > q.q3) return PolarityLabel::Positive;
  if (pll < q.q1) return PolarityLabel::Negative;
  return PolarityLabel::Neutral;
}

void classify_all(std::span<const double> pll, const Quartiles& q, std::span<int> labels, Exec exec) {
  const auto n = static_cast<std::int64_t>(pll.size());
  if (exec == Exec::Serial) {
    for (std::int64_t i = 0; i < n; ++i) labels[i] = static_cast<int>(classify_polarity(pll[i], q));
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) labels[i] = static_cast<int>(classify_polarity(pll[i], q));
}

PolarityIndex build_polarity_index(const data::ScoreTable& scores, Aggregation agg, Exec exec) {
  std::vector<double> pll;
  pll.reserve(scores.rows.size());
  for (const auto& row : scores.rows) pll.push_back(row.pll);
  const Quartiles q = compute_quartiles(pll);

  std::vector<int> labels(pll.size());
  classify_all(pll, q, labels, exec);

  std::map<Date, std::pair<long, long>> by_day;  // sum, count
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& [sum, count] = by_day[scores.rows[i].date];
    sum += labels[i];
    ++count;
  }
  PolarityIndex index;
  for (const auto& [date, acc] : by_day) {
    index.dates.push_back(date);
    const double sum = static_cast<double>(acc.first);
    index.values.push_back(agg == Aggregation::Sum ? sum : sum / static_cast<double>(acc.second));
  }
  return index;
}

}  // namespace ssaam::sentiment
