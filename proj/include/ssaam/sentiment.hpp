#pragma once

#include <span>
#include <vector>

#include "ssaam/data.hpp"
#include "ssaam/exec.hpp"

namespace ssaam::sentiment {

struct Quartiles {
  double q1 = 0.0;
  double q3 = 0.0;
};

enum class PolarityLabel : int { Negative = -1, Neutral = 0, Positive = 1 };

enum class Aggregation { Sum, Mean };

/// Daily aggregate of sentence labels. Values are integral under Sum.
using PolarityIndex = data::DatedSeries;

/// Linear interpolation between order statistics at position 1+(n-1)p.
/// Needs at least four finite scores.
Quartiles compute_quartiles(std::span<const double> scores);

/// Boundaries are neutral: q1 <= pll <= q3 maps to 0.
PolarityLabel classify_polarity(double pll, const Quartiles& q);

void classify_all(std::span<const double> pll, const Quartiles& q, std::span<int> labels,
                  Exec exec = Exec::Parallel);

/// Quartiles come from the whole table, not per day.
PolarityIndex build_polarity_index(const data::ScoreTable& scores, Aggregation agg = Aggregation::Sum,
                                   Exec exec = Exec::Parallel);

}  // namespace ssaam::sentiment
