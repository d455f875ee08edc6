#include "ssaam/risk.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "ssaam/error.hpp"

namespace ssaam::optim {

namespace {

void check_inputs(std::span<const double> losses, double alpha) {
  if (losses.empty()) throw Error(ErrorCode::InvalidArgument, "empty loss sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, fmt::format("alpha {} not in (0,1)", alpha));
  for (double x : losses)
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteInput, "loss sample has non-finite values");
}

std::size_t tail_count(std::size_t n, double alpha) {
  const double k = std::ceil(alpha * static_cast<double>(n) - 1e-12);
  return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, n);
}

}  // namespace

double value_at_risk(std::span<const double> losses, double alpha) {
  check_inputs(losses, alpha);
  std::vector<double> sorted(losses.begin(), losses.end());
  const std::size_t k = tail_count(sorted.size(), alpha);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end(),
                   std::greater<>());
  return sorted[k - 1];
}

double conditional_value_at_risk(std::span<const double> losses, double alpha) {
  const double var = value_at_risk(losses, alpha);
  double excess = 0.0;
  for (double x : losses) excess += std::max(x - var, 0.0);
  return var + excess / (alpha * static_cast<double>(losses.size()));
}

double evar_objective(std::span<const double> losses, double alpha, double z) {
  const double top = *std::max_element(losses.begin(), losses.end());
  double acc = 0.0;
  for (double x : losses) acc += std::exp((x - top) / z);
  return top + z * (std::log(acc) - std::log(static_cast<double>(losses.size())) - std::log(alpha));
}

EvarResult evar_scalar(std::span<const double> losses, double alpha) {
  check_inputs(losses, alpha);
  const double n = static_cast<double>(losses.size());
  const double top = *std::max_element(losses.begin(), losses.end());
  double mean = 0.0;
  std::size_t ties = 0;
  for (double x : losses) {
    mean += x;
    if (x == top) ++ties;
  }
  mean /= n;

  // With at least alpha of the mass on the maximum, f(z) >= max for all z
  // and the infimum is the z -> 0 limit.
  if (static_cast<double>(ties) >= alpha * n) return {top, 0.0};

  // f(z) >= mean + z ln(1/alpha), so the minimiser lies below z_hi.
  const double z_hi = (top - mean) / std::log(1.0 / alpha);
  auto f = [&](double log_z) { return evar_objective(losses, alpha, std::exp(log_z)); };
  const double hi = std::log(z_hi);
  const auto [log_z, value] = boost::math::tools::brent_find_minima(f, hi - 40.0, hi, 52);
  EvarResult best{value, std::exp(log_z)};
  const double at_hi = f(hi);
  if (at_hi < best.value) best = {at_hi, z_hi};
  return best;
}

}  // namespace ssaam::optim
