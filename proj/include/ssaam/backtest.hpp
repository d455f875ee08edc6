#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ssaam/cpd.hpp"
#include "ssaam/data.hpp"
#include "ssaam/date.hpp"
#include "ssaam/exec.hpp"
#include "ssaam/optim.hpp"

namespace ssaam::backtest {

enum class EntrySource { Periodic, ChangePoint };

struct ScheduleEntry {
  std::size_t offset = 0;  // position in the calendar the schedule was built on
  Date date;
  EntrySource source = EntrySource::Periodic;
  std::optional<cpd::Trend> trend;  // set for change-point entries
};

struct RebalanceSchedule {
  std::vector<ScheduleEntry> entries;
};

/// Union of every period_days-th date (offset 0 first) and the start of every
/// regime after the first. Regime offsets index into `dates`. A date that is
/// both keeps source ChangePoint.
RebalanceSchedule build_schedule(const std::vector<Date>& dates, std::size_t period_days,
                                 const std::vector<cpd::Regime>& regimes);

enum class StrategyKind { CpdEvarPlusPlus, CpdEvarPlus, Evar, Cvar, Mv };

std::string_view strategy_name(StrategyKind kind);
/// Throws UnknownStrategy.
StrategyKind parse_strategy(std::string_view name);
bool is_cpd(StrategyKind kind);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::CpdEvarPlusPlus;
  std::size_t period_days = 30;
  std::optional<std::size_t> n_regimes;  // CPD kinds only
  double alpha = 0.05;
  /// Absolute mean-return floor; defaults to the mean of the per-asset means
  /// over the estimation window.
  std::optional<double> mu_target;
  /// Risk budget of the max-return program: min EVaR + margin * |min EVaR|.
  double evar_cap_margin = 0.5;
};

/// Throws InvalidConfig when regime fields do not match the kind.
void validate(const StrategyConfig& config);

enum class OptimizerMode {
  MinEvarWithTarget,
  MinEvarUnconstrained,
  MaxReturnEvar,
  MinCvar,
  MinVariance,
};

std::string_view mode_name(OptimizerMode mode);

/// Program solved at a schedule entry; nullopt when the strategy ignores it.
std::optional<OptimizerMode> select_optimizer(const StrategyConfig& config, const ScheduleEntry& entry);

struct Trade {
  Date date;
  Eigen::VectorXd old_weights;  // drifted weights just before the trade
  Eigen::VectorXd new_weights;
  double value_before = 0.0;
  double value_after = 0.0;
  std::optional<OptimizerMode> mode;  // nullopt for the initial seed
};

struct EquityCurve {
  std::vector<Date> dates;
  std::vector<double> values;
  std::vector<Trade> trades;
  double initial_capital = 1.0;
  double bought = 0.0;  // cumulative amount bought, including the initial purchase
  double sold = 0.0;
  double distributions = 0.0;
  std::vector<std::string> warnings;
};

/// Weights chosen for one entry from the trailing estimation window.
struct Decision {
  optim::Weights w;
  bool feasible = true;
  std::string note;
};

/// Solves the program for `mode` on the returns window.
Decision decide(const optim::ReturnsMatrix& window, const StrategyConfig& config, OptimizerMode mode);

/// Seeds equal weights at the first schedule date, trades at each entry's
/// close to the weights estimated from the preceding lookback_days returns,
/// and marks to market every day until the last price date. Every schedule
/// date must be a price date with at least lookback_days of history.
EquityCurve run_backtest(const data::PriceTable& prices, const RebalanceSchedule& schedule,
                         const StrategyConfig& config, double initial_capital = 1.0,
                         std::size_t lookback_days = 252);

/// (valuation + distributions + sold - bought) / initial capital, in percent.
double total_return(const EquityCurve& curve);
/// Worst (value - running peak) / running peak, in percent (<= 0).
double max_drawdown(std::span<const double> values);
double max_drawdown(const EquityCurve& curve);

struct PerfReport {
  StrategyConfig strategy;
  double tr_pct = 0.0;
  double mdd_pct = 0.0;
  EquityCurve curve;
  RebalanceSchedule schedule;
};

/// Everything a grid run needs besides the strategy list.
struct GridInputs {
  data::PriceTable prices;        // restricted to the backtest calendar
  std::vector<double> index;      // polarity index on the same calendar
  std::size_t lookback_days = 252;
  double initial_capital = 1.0;
  bool walk_forward = false;
};

/// Schedule for one configuration. Change points come from binary
/// segmentation of the full index, or, with walk_forward, from an expanding
/// window ending at each periodic date.
RebalanceSchedule schedule_for(const GridInputs& in, const StrategyConfig& config);

PerfReport run_strategy(const GridInputs& in, const StrategyConfig& config);

/// Runs every configuration; results keep the order of `configs`.
std::vector<PerfReport> run_grid(const GridInputs& in, const std::vector<StrategyConfig>& configs,
                                 Exec exec = Exec::Parallel, int jobs = 0);

/// The 12 CPD configurations followed by the 9 comparison configurations.
std::vector<StrategyConfig> standard_grid(double alpha = 0.05, std::optional<double> mu_target = {},
                                          double evar_cap_margin = 0.5);

}  // namespace ssaam::backtest
