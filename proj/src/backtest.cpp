#include "ssaam/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "ssaam/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ssaam::backtest {

RebalanceSchedule build_schedule(const std::vector<Date>& dates, std::size_t period_days,
                                 const std::vector<cpd::Regime>& regimes) {
  if (dates.empty()) throw Error(ErrorCode::EmptyTable, "rebalance calendar is empty");
  if (period_days == 0) throw Error(ErrorCode::InvalidConfig, "period_days must be positive");

  std::map<std::size_t, ScheduleEntry> merged;
  for (std::size_t k = 0; k < dates.size(); k += period_days)
    merged[k] = ScheduleEntry{k, dates[k], EntrySource::Periodic, std::nullopt};
  for (const auto& r : regimes) {
    if (r.start == 0 || r.start >= dates.size()) continue;
    merged[r.start] = ScheduleEntry{r.start, dates[r.start], EntrySource::ChangePoint, r.trend};
  }
  RebalanceSchedule s;
  s.entries.reserve(merged.size());
  for (auto& [k, e] : merged) s.entries.push_back(e);
  return s;
}

std::string_view strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::CpdEvarPlusPlus: return "CPD-EVaR++";
    case StrategyKind::CpdEvarPlus: return "CPD-EVaR+";
    case StrategyKind::Evar: return "EVaR";
    case StrategyKind::Cvar: return "CVaR";
    case StrategyKind::Mv: return "MV";
  }
  return "?";
}

StrategyKind parse_strategy(std::string_view name) {
  for (StrategyKind k : {StrategyKind::CpdEvarPlusPlus, StrategyKind::CpdEvarPlus, StrategyKind::Evar,
                         StrategyKind::Cvar, StrategyKind::Mv})
    if (strategy_name(k) == name) return k;
  throw Error(ErrorCode::UnknownStrategy, fmt::format("'{}'", name));
}

bool is_cpd(StrategyKind kind) {
  return kind == StrategyKind::CpdEvarPlusPlus || kind == StrategyKind::CpdEvarPlus;
}

void validate(const StrategyConfig& config) {
  if (is_cpd(config.kind) && !config.n_regimes)
    throw Error(ErrorCode::InvalidConfig, fmt::format("{} needs n_regimes", strategy_name(config.kind)));
  if (!is_cpd(config.kind) && config.n_regimes)
    throw Error(ErrorCode::InvalidConfig, fmt::format("{} takes no n_regimes", strategy_name(config.kind)));
  if (config.n_regimes && *config.n_regimes == 0) throw Error(ErrorCode::InvalidConfig, "n_regimes must be >= 1");
  if (config.period_days == 0) throw Error(ErrorCode::InvalidConfig, "period_days must be positive");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw Error(ErrorCode::InvalidConfig, "alpha must be in (0,1)");
  if (!(config.evar_cap_margin >= 0.0)) throw Error(ErrorCode::InvalidConfig, "evar_cap_margin must be >= 0");
}

std::string_view mode_name(OptimizerMode mode) {
  switch (mode) {
    case OptimizerMode::MinEvarWithTarget: return "min_evar_target";
    case OptimizerMode::MinEvarUnconstrained: return "min_evar";
    case OptimizerMode::MaxReturnEvar: return "max_return_evar";
    case OptimizerMode::MinCvar: return "min_cvar";
    case OptimizerMode::MinVariance: return "min_variance";
  }
  return "?";
}

std::optional<OptimizerMode> select_optimizer(const StrategyConfig& config, const ScheduleEntry& entry) {
  const bool change = entry.source == EntrySource::ChangePoint;
  const bool down = change && entry.trend == cpd::Trend::Down;
  switch (config.kind) {
    case StrategyKind::CpdEvarPlusPlus:
      if (down) return OptimizerMode::MaxReturnEvar;
      return OptimizerMode::MinEvarWithTarget;
    case StrategyKind::CpdEvarPlus:
      if (down) return OptimizerMode::MinEvarUnconstrained;
      return OptimizerMode::MinEvarWithTarget;
    case StrategyKind::Evar:
      if (change) return std::nullopt;
      return OptimizerMode::MinEvarWithTarget;
    case StrategyKind::Cvar:
      if (change) return std::nullopt;
      return OptimizerMode::MinCvar;
    case StrategyKind::Mv:
      if (change) return std::nullopt;
      return OptimizerMode::MinVariance;
  }
  return std::nullopt;
}

namespace {

optim::Weights clean(optim::Weights w) {
  w = w.cwiseMax(0.0);
  const double s = w.sum();
  if (s > 0.0) w /= s;
  return w;
}

Decision from_status(const optim::Weights& w, optim::SolveStatus status, std::string_view what) {
  if (status == optim::SolveStatus::Optimal) return {clean(w), true, {}};
  return {w, false, fmt::format("{} returned {}", what, optim::status_name(status))};
}

std::size_t position_of(const std::vector<Date>& dates, Date d) {
  const auto it = std::lower_bound(dates.begin(), dates.end(), d);
  if (it == dates.end() || *it != d)
    throw Error(ErrorCode::InvalidArgument, fmt::format("schedule date {} is not a price date", d.iso()));
  return static_cast<std::size_t>(it - dates.begin());
}

Eigen::VectorXd weights_of(const Eigen::VectorXd& holdings, const Eigen::VectorXd& prices) {
  const Eigen::VectorXd v = holdings.cwiseProduct(prices);
  return v / v.sum();
}

}  // namespace

Decision decide(const optim::ReturnsMatrix& window, const StrategyConfig& config, OptimizerMode mode) {
  const double mu = config.mu_target ? *config.mu_target : window.mean().mean();
  switch (mode) {
    case OptimizerMode::MinEvarWithTarget: {
      const auto s = optim::min_evar_portfolio(window, {config.alpha, mu, std::nullopt});
      return from_status(s.w, s.status, "min-EVaR");
    }
    case OptimizerMode::MinEvarUnconstrained: {
      const auto s = optim::min_evar_portfolio(window, {config.alpha, std::nullopt, std::nullopt});
      return from_status(s.w, s.status, "min-EVaR");
    }
    case OptimizerMode::MaxReturnEvar: {
      const auto least = optim::min_evar_portfolio(window, {config.alpha, std::nullopt, std::nullopt});
      if (least.status != optim::SolveStatus::Optimal) return from_status(least.w, least.status, "min-EVaR");
      const double cap = least.objective + config.evar_cap_margin * std::abs(least.objective);
      const auto s = optim::max_return_evar_portfolio(window, {config.alpha, std::nullopt, cap});
      return from_status(s.w, s.status, "max-return EVaR");
    }
    case OptimizerMode::MinCvar: {
      const auto s = optim::min_cvar_portfolio(window, config.alpha, mu);
      return from_status(s.w, s.status, "min-CVaR");
    }
    case OptimizerMode::MinVariance: {
      const auto s = optim::min_variance_portfolio(window, mu);
      return from_status(s.w, s.status, "min-variance");
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown optimizer mode");
}

EquityCurve run_backtest(const data::PriceTable& prices, const RebalanceSchedule& schedule,
                         const StrategyConfig& config, double initial_capital, std::size_t lookback_days) {
  validate(config);
  if (schedule.entries.empty()) throw Error(ErrorCode::InvalidArgument, "empty rebalance schedule");
  if (!(initial_capital > 0.0)) throw Error(ErrorCode::InvalidConfig, "initial capital must be positive");
  if (lookback_days < 1) throw Error(ErrorCode::InvalidConfig, "lookback_days must be >= 1");
  const Eigen::Index n = static_cast<Eigen::Index>(prices.tickers.size());
  const std::size_t first = position_of(prices.dates, schedule.entries.front().date);
  if (first < lookback_days)
    throw Error(ErrorCode::InsufficientSamples,
                fmt::format("first rebalance {} has {} days of history, {} needed",
                            schedule.entries.front().date.iso(), first, lookback_days));

  std::vector<std::size_t> at;
  at.reserve(schedule.entries.size());
  for (const auto& e : schedule.entries) at.push_back(position_of(prices.dates, e.date));

  EquityCurve curve;
  curve.initial_capital = initial_capital;
  auto price_row = [&](std::size_t i) -> Eigen::VectorXd { return prices.values.row(static_cast<Eigen::Index>(i)); };

  // Equal-weight seed at the first schedule date.
  Eigen::VectorXd p = price_row(first);
  const Eigen::VectorXd seed = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd holdings = (initial_capital * seed).cwiseQuotient(p);
  curve.bought = initial_capital;
  curve.trades.push_back({prices.dates[first], Eigen::VectorXd::Zero(n), seed, 0.0, initial_capital, std::nullopt});

  std::size_t next = 0;
  for (std::size_t i = first; i < prices.dates.size(); ++i) {
    p = price_row(i);
    while (next < at.size() && at[next] == i) {
      const auto& entry = schedule.entries[next++];
      const auto mode = select_optimizer(config, entry);
      if (!mode) continue;
      const Eigen::MatrixXd window =
          prices.values.middleRows(static_cast<Eigen::Index>(i - lookback_days), static_cast<Eigen::Index>(lookback_days + 1));
      const Decision d = decide(optim::simple_returns(window), config, *mode);
      if (!d.feasible) {
        curve.warnings.push_back(fmt::format("{}: {}; keeping previous weights", entry.date.iso(), d.note));
        continue;
      }
      const double value = holdings.dot(p);
      const Eigen::VectorXd target = (value * d.w).cwiseQuotient(p);
      const Eigen::VectorXd delta = (target - holdings).cwiseProduct(p);
      curve.bought += delta.cwiseMax(0.0).sum();
      curve.sold += (-delta).cwiseMax(0.0).sum();
      curve.trades.push_back({entry.date, weights_of(holdings, p), d.w, value, target.dot(p), mode});
      holdings = target;
    }
    curve.dates.push_back(prices.dates[i]);
    curve.values.push_back(holdings.dot(p));
  }
  return curve;
}

double total_return(const EquityCurve& curve) {
  if (curve.values.empty()) throw Error(ErrorCode::InvalidArgument, "empty equity curve");
  const double tr = curve.values.back() + curve.distributions + curve.sold - curve.bought;
  return tr / curve.initial_capital * 100.0;
}

double max_drawdown(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "empty equity curve");
  double peak = values.front();
  double worst = 0.0;
  for (double v : values) {
    peak = std::max(peak, v);
    worst = std::min(worst, (v - peak) / peak);
  }
  return worst * 100.0;
}

double max_drawdown(const EquityCurve& curve) { return max_drawdown(curve.values); }

RebalanceSchedule schedule_for(const GridInputs& in, const StrategyConfig& config) {
  validate(config);
  const std::size_t total = in.prices.dates.size();
  if (in.index.size() != total) throw Error(ErrorCode::InvalidArgument, "index and price calendars differ");
  if (total <= in.lookback_days)
    throw Error(ErrorCode::InsufficientSamples,
                fmt::format("{} dates leave no tradable window after a {}-day lookback", total, in.lookback_days));
  const std::size_t origin = in.lookback_days;
  const std::vector<Date> tradable(in.prices.dates.begin() + static_cast<std::ptrdiff_t>(origin), in.prices.dates.end());

  std::vector<cpd::Regime> shifted;
  if (is_cpd(config.kind) && !in.walk_forward) {
    for (const auto& r : cpd::segment_regimes(in.index, *config.n_regimes)) {
      if (r.end <= origin) continue;
      shifted.push_back({std::max(r.start, origin) - origin, r.end - origin, r.trend});
    }
    return build_schedule(tradable, config.period_days, shifted);
  }

  RebalanceSchedule s = build_schedule(tradable, config.period_days, shifted);
  if (!is_cpd(config.kind)) return s;

  // Walk-forward: segment only the history up to each periodic date; the
  // entry becomes a change point when the latest regime began since the
  // previous periodic date.
  std::size_t previous = 0;
  for (auto& e : s.entries) {
    const std::size_t i = origin + e.offset;
    const std::span<const double> history(in.index.data(), i + 1);
    const auto regimes = cpd::segment_regimes(history, *config.n_regimes);
    const cpd::Regime& last = regimes.back();
    if (last.start > 0 && last.start > previous && e.offset > 0) {
      e.source = EntrySource::ChangePoint;
      e.trend = last.trend;
    }
    previous = i;
  }
  return s;
}

PerfReport run_strategy(const GridInputs& in, const StrategyConfig& config) {
  PerfReport r;
  r.strategy = config;
  r.schedule = schedule_for(in, config);
  r.curve = run_backtest(in.prices, r.schedule, config, in.initial_capital, in.lookback_days);
  r.tr_pct = total_return(r.curve);
  r.mdd_pct = max_drawdown(r.curve);
  return r;
}

std::vector<PerfReport> run_grid(const GridInputs& in, const std::vector<StrategyConfig>& configs, Exec exec,
                                 int jobs) {
  for (const auto& c : configs) validate(c);
  std::vector<PerfReport> out(configs.size());
  if (exec == Exec::Serial) {
    for (std::size_t k = 0; k < configs.size(); ++k) out[k] = run_strategy(in, configs[k]);
    return out;
  }

  std::vector<std::exception_ptr> errors(configs.size());
  const long count = static_cast<long>(configs.size());
#ifdef _OPENMP
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
  for (long k = 0; k < count; ++k) {
    try {
      out[static_cast<std::size_t>(k)] = run_strategy(in, configs[static_cast<std::size_t>(k)]);
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  (void)jobs;
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<StrategyConfig> standard_grid(double alpha, std::optional<double> mu_target, double evar_cap_margin) {
  std::vector<StrategyConfig> grid;
  for (std::size_t period : {30u, 90u, 180u})
    for (std::size_t regimes : {5u, 10u})
      for (StrategyKind k : {StrategyKind::CpdEvarPlusPlus, StrategyKind::CpdEvarPlus})
        grid.push_back({k, period, regimes, alpha, mu_target, evar_cap_margin});
  for (std::size_t period : {30u, 90u, 180u})
    for (StrategyKind k : {StrategyKind::Evar, StrategyKind::Cvar, StrategyKind::Mv})
      grid.push_back({k, period, std::nullopt, alpha, mu_target, evar_cap_margin});
  return grid;
}

}  // namespace ssaam::backtest
