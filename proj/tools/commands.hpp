#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ssaam/backtest.hpp"
#include "ssaam/sentiment.hpp"

namespace ssaam::cli {

/// Parsed run configuration of the backtest stage. Relative data paths are
/// resolved against the directory of the config file.
struct BacktestConfig {
  std::filesystem::path prices;
  std::optional<std::filesystem::path> index;   // polarity index CSV
  std::optional<std::filesystem::path> scores;  // used when no index is given
  sentiment::Aggregation aggregation = sentiment::Aggregation::Sum;
  std::vector<backtest::StrategyKind> strategies;
  std::vector<std::size_t> periods{30, 90, 180};
  std::vector<std::size_t> regimes{5, 10};
  double alpha = 0.05;
  std::optional<double> mu_target;
  double evar_cap_margin = 0.5;
  std::size_t lookback_days = 252;
  double initial_capital = 1.0;
  std::uint64_t seed = 0;
  bool walk_forward = false;
};

/// Throws InvalidConfig / UnknownStrategy / ParseError / MissingFile.
BacktestConfig load_backtest_config(const std::filesystem::path& path);

/// Prices and polarity index on their common calendar.
backtest::GridInputs load_inputs(const BacktestConfig& config);

/// CPD configurations (period, then regimes, then kind) followed by the
/// comparison configurations (period, then kind).
std::vector<backtest::StrategyConfig> expand_grid(const BacktestConfig& config);

/// Column label of one configuration, e.g. `CPD-EVaR++/30/5` or `MV/90`.
std::string config_label(const backtest::StrategyConfig& config);

/// Output root: `--out` if given, else $SSAAM_OUT, else `out`.
std::filesystem::path output_root(const std::optional<std::string>& flag);

/// Entry point shared by the binary and the tests. Returns the exit code:
/// 0 success, 2 input or configuration error, 1 anything else.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ssaam::cli
