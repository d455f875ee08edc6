#include "ssaam/cpd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "ssaam/error.hpp"

namespace ssaam::cpd {

L2Cost::L2Cost(std::span<const double> signal) : sum_(signal.size() + 1, 0.0), sum_sq_(signal.size() + 1, 0.0) {
  const double mean =
      signal.empty() ? 0.0 : std::accumulate(signal.begin(), signal.end(), 0.0) / static_cast<double>(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) {
    const double y = signal[i] - mean;
    sum_[i + 1] = sum_[i] + y;
    sum_sq_[i + 1] = sum_sq_[i] + y * y;
  }
}

double L2Cost::operator()(std::size_t a, std::size_t b) const {
  if (a >= b || b > size()) throw Error(ErrorCode::InvalidArgument, fmt::format("empty range [{}, {})", a, b));
  const double s = sum_[b] - sum_[a];
  const double c = (sum_sq_[b] - sum_sq_[a]) - s * s / static_cast<double>(b - a);
  return c > 0.0 ? c : 0.0;
}

double cost_l2(std::span<const double> signal, std::size_t a, std::size_t b) {
  if (a >= b || b > signal.size()) throw Error(ErrorCode::InvalidArgument, fmt::format("empty range [{}, {})", a, b));
  double mean = 0.0;
  for (std::size_t i = a; i < b; ++i) mean += signal[i];
  mean /= static_cast<double>(b - a);
  double c = 0.0;
  for (std::size_t i = a; i < b; ++i) c += (signal[i] - mean) * (signal[i] - mean);
  return c;
}

namespace {

inline bool better(double cost, std::size_t index, const Split& best) {
  return cost < best.cost || (cost == best.cost && index < best.index);
}

}  // namespace

bool best_split(const SegmentCost& cost, std::size_t a, std::size_t b, std::size_t min_size, Split& out, Exec exec) {
  if (b < a + 2 * min_size) return false;
  const std::size_t first = a + min_size;
  const std::size_t last = b - min_size;  // inclusive
  Split best{first, std::numeric_limits<double>::infinity()};

  if (exec == Exec::Serial) {
    for (std::size_t s = first; s <= last; ++s) {
      const double c = cost(a, s) + cost(s, b);
      if (better(c, s, best)) best = {s, c};
    }
  } else {
    const auto lo = static_cast<std::int64_t>(first);
    const auto hi = static_cast<std::int64_t>(last);
#pragma omp parallel
    {
      Split local{first, std::numeric_limits<double>::infinity()};
#pragma omp for schedule(static) nowait
      for (std::int64_t s = lo; s <= hi; ++s) {
        const auto si = static_cast<std::size_t>(s);
        const double c = cost(a, si) + cost(si, b);
        if (better(c, si, local)) local = {si, c};
      }
#pragma omp critical(ssaam_best_split)
      if (better(local.cost, local.index, best)) best = local;
    }
  }
  out = best;
  return true;
}

std::vector<std::size_t> Breakpoints::boundaries() const {
  auto b = indexes;
  b.push_back(signal_size);
  return b;
}

Breakpoints binseg(std::span<const double> signal, std::size_t n_bkps, const SegmentCost& cost, std::size_t min_size,
                   Exec exec) {
  const std::size_t S = signal.size();
  if (S < 2) throw Error(ErrorCode::InvalidArgument, "signal needs at least 2 samples");
  for (double y : signal)
    if (!std::isfinite(y)) throw Error(ErrorCode::NonFiniteInput, "signal has non-finite samples");
  if (min_size < 1) throw Error(ErrorCode::InvalidArgument, "min_size must be positive");
  if (cost.size() != S) throw Error(ErrorCode::InvalidArgument, "cost built for a different signal");
  if (n_bkps + 1 > S / min_size)
    throw Error(ErrorCode::InfeasibleBreakpoints,
                fmt::format("{} breakpoints with min_size {} on {} samples", n_bkps, min_size, S));

  Breakpoints out;
  out.signal_size = S;
  const double scale = 1.0 + cost(0, S);

  struct Segment {
    std::size_t a, b;
    bool splittable;
    Split split;
    double gain;
  };
  auto evaluate = [&](std::size_t a, std::size_t b) {
    Segment seg{a, b, false, {}, 0.0};
    seg.splittable = best_split(cost, a, b, min_size, seg.split, exec);
    if (seg.splittable) seg.gain = cost(a, b) - seg.split.cost;
    return seg;
  };

  std::vector<Segment> segments{evaluate(0, S)};
  while (out.indexes.size() < n_bkps) {
    std::size_t pick = segments.size();
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (!segments[i].splittable) continue;
      if (pick == segments.size() || segments[i].gain > segments[pick].gain) pick = i;
    }
    if (pick == segments.size())
      throw Error(ErrorCode::InfeasibleBreakpoints,
                  fmt::format("no admissible split left after {} breakpoints", out.indexes.size()));

    const Segment chosen = segments[pick];
    if (chosen.gain <= 1e-12 * scale) out.zero_gain = true;
    const std::size_t s = chosen.split.index;
    segments[pick] = evaluate(chosen.a, s);
    segments.insert(segments.begin() + static_cast<std::ptrdiff_t>(pick) + 1, evaluate(s, chosen.b));
    out.indexes.insert(std::upper_bound(out.indexes.begin(), out.indexes.end(), s), s);
  }
  return out;
}

Breakpoints binseg(std::span<const double> signal, std::size_t n_bkps, std::size_t min_size, Exec exec) {
  const L2Cost cost(signal);
  return binseg(signal, n_bkps, cost, min_size, exec);
}

Trend classify_trend(std::span<const double> signal, std::size_t start, std::size_t end) {
  if (end > signal.size() || end < start + 2)
    throw Error(ErrorCode::InvalidArgument, fmt::format("regime [{}, {}) shorter than 2 samples", start, end));
  const double n = static_cast<double>(end - start);
  const double x_mean = (n - 1.0) / 2.0;
  double y_mean = 0.0;
  for (std::size_t i = start; i < end; ++i) y_mean += signal[i];
  y_mean /= n;
  double num = 0.0;
  for (std::size_t i = start; i < end; ++i) num += (static_cast<double>(i - start) - x_mean) * (signal[i] - y_mean);
  // The denominator is positive, so the numerator carries the slope sign.
  return num >= 0.0 ? Trend::Up : Trend::Down;
}

std::vector<Regime> regimes_from_breakpoints(std::span<const double> signal, const Breakpoints& bkps) {
  std::vector<Regime> regimes;
  std::size_t start = 0;
  for (std::size_t end : bkps.boundaries()) {
    regimes.push_back({start, end, classify_trend(signal, start, end)});
    start = end;
  }
  return regimes;
}

std::vector<Regime> segment_regimes(std::span<const double> signal, std::size_t n_regimes, std::size_t min_size,
                                    Exec exec) {
  if (n_regimes < 1) throw Error(ErrorCode::InvalidArgument, "need at least one regime");
  const auto bkps = n_regimes == 1 ? Breakpoints{{}, signal.size(), false} : binseg(signal, n_regimes - 1, min_size, exec);
  return regimes_from_breakpoints(signal, bkps);
}

const char* trend_name(Trend t) { return t == Trend::Up ? "up" : "down"; }

}  // namespace ssaam::cpd
