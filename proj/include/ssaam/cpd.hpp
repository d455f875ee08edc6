#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ssaam/exec.hpp"

namespace ssaam::cpd {

/// Cost of the half-open sub-signal [a, b).
class SegmentCost {
 public:
  virtual ~SegmentCost() = default;
  virtual double operator()(std::size_t a, std::size_t b) const = 0;
  virtual std::size_t size() const = 0;
};

/// Squared deviation from the segment mean, O(1) per query via prefix sums
/// over the globally centred signal.
class L2Cost final : public SegmentCost {
 public:
  explicit L2Cost(std::span<const double> signal);
  double operator()(std::size_t a, std::size_t b) const override;
  std::size_t size() const override { return sum_.size() - 1; }

 private:
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
};

/// Direct two-pass evaluation.
double cost_l2(std::span<const double> signal, std::size_t a, std::size_t b);

struct Split {
  std::size_t index = 0;
  double cost = 0.0;  // cost(a, index) + cost(index, b)
};

/// Smallest-index argmin over s in [a + min_size, b - min_size]. Returns
/// false when the segment is too short to split.
bool best_split(const SegmentCost& cost, std::size_t a, std::size_t b, std::size_t min_size, Split& out,
                Exec exec = Exec::Parallel);

struct Breakpoints {
  std::vector<std::size_t> indexes;  // interior split points, ascending; S is implicit
  std::size_t signal_size = 0;
  bool zero_gain = false;  // some accepted split had no cost reduction

  /// indexes followed by the terminal S.
  std::vector<std::size_t> boundaries() const;
};

/// Greedy binary segmentation with a fixed breakpoint count.
Breakpoints binseg(std::span<const double> signal, std::size_t n_bkps, const SegmentCost& cost,
                   std::size_t min_size = 2, Exec exec = Exec::Parallel);
Breakpoints binseg(std::span<const double> signal, std::size_t n_bkps, std::size_t min_size = 2,
                   Exec exec = Exec::Parallel);

enum class Trend { Up, Down };

struct Regime {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  Trend trend = Trend::Up;
};

/// OLS slope of value against sample index; zero slope counts as Up.
Trend classify_trend(std::span<const double> signal, std::size_t start, std::size_t end);

std::vector<Regime> regimes_from_breakpoints(std::span<const double> signal, const Breakpoints& bkps);

/// n_regimes - 1 breakpoints, then tiling and trend labels.
std::vector<Regime> segment_regimes(std::span<const double> signal, std::size_t n_regimes, std::size_t min_size = 2,
                                    Exec exec = Exec::Parallel);

const char* trend_name(Trend t);

}  // namespace ssaam::cpd
