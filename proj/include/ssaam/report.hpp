#pragma once

#include <string>
#include <vector>

#include "ssaam/backtest.hpp"

namespace ssaam::report {

struct TableRow {
  std::size_t period_days = 0;
  std::optional<std::size_t> n_regimes;
  std::string algorithm;
  double tr_pct = 0.0;
  double mdd_pct = 0.0;  // magnitude
  bool best_tr = false;
  bool best_mdd = false;
};

/// Rows sorted by period, then regime count, then the strategy order
/// CPD-EVaR++, CPD-EVaR+, EVaR, CVaR, MV. Best TR is the highest, best MDD
/// the smallest magnitude; ties are all marked. Values compare at the
/// printed 4-decimal precision.
struct Table {
  bool with_regime = false;
  std::vector<TableRow> rows;
};

/// CPD results form the regime table, the rest the comparison table.
/// Either may be empty.
struct GridTables {
  Table cpd;
  Table comparison;
};

GridTables report_grid(const std::vector<backtest::PerfReport>& results);
Table make_table(const std::vector<backtest::PerfReport>& results, bool with_regime);

/// Pipe-separated text; best values carry a trailing '*'.
std::string format_text(const Table& table, std::string_view title);
/// rebalance,[regime,]algorithm,tr_pct,mdd_pct,best_tr,best_mdd
std::string format_csv(const Table& table);

/// Curve CSV `date,value`.
std::string format_curve(const backtest::EquityCurve& curve);

}  // namespace ssaam::report
