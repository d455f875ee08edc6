#include "ssaam/report.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "ssaam/error.hpp"

namespace ssaam::report {

namespace {

int strategy_rank(std::string_view name) {
  constexpr std::string_view order[] = {"CPD-EVaR++", "CPD-EVaR+", "EVaR", "CVaR", "MV"};
  for (int i = 0; i < 5; ++i)
    if (order[i] == name) return i;
  return 5;
}

// Fixed 4-decimal rendering shared by comparisons and output.
std::string fixed4(double v) {
  std::string s = fmt::format("{:.4f}", v);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

double rounded(double v) { return std::stod(fixed4(v)); }

}  // namespace

Table make_table(const std::vector<backtest::PerfReport>& results, bool with_regime) {
  Table t;
  t.with_regime = with_regime;
  for (const auto& r : results)
    t.rows.push_back({r.strategy.period_days, with_regime ? r.strategy.n_regimes : std::nullopt,
                      std::string(backtest::strategy_name(r.strategy.kind)), r.tr_pct, std::abs(r.mdd_pct)});
  std::stable_sort(t.rows.begin(), t.rows.end(), [](const TableRow& a, const TableRow& b) {
    return std::make_tuple(a.period_days, a.n_regimes.value_or(0), strategy_rank(a.algorithm)) <
           std::make_tuple(b.period_days, b.n_regimes.value_or(0), strategy_rank(b.algorithm));
  });
  if (t.rows.empty()) return t;
  double best_tr = rounded(t.rows.front().tr_pct), best_mdd = rounded(t.rows.front().mdd_pct);
  for (const auto& r : t.rows) {
    best_tr = std::max(best_tr, rounded(r.tr_pct));
    best_mdd = std::min(best_mdd, rounded(r.mdd_pct));
  }
  for (auto& r : t.rows) {
    r.best_tr = rounded(r.tr_pct) == best_tr;
    r.best_mdd = rounded(r.mdd_pct) == best_mdd;
  }
  return t;
}

GridTables report_grid(const std::vector<backtest::PerfReport>& results) {
  if (results.empty()) throw Error(ErrorCode::InvalidArgument, "no results to report");
  std::vector<backtest::PerfReport> cpd, other;
  for (const auto& r : results) (backtest::is_cpd(r.strategy.kind) ? cpd : other).push_back(r);
  return {make_table(cpd, true), make_table(other, false)};
}

std::string format_text(const Table& table, std::string_view title) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {"Rebalance"};
  if (table.with_regime) header.push_back("Regime");
  header.insert(header.end(), {"Algorithm", "TR [%]", "MDD [%]"});
  cells.push_back(header);
  for (const auto& r : table.rows) {
    std::vector<std::string> row = {fmt::format("{}-days", r.period_days)};
    if (table.with_regime) row.push_back(r.n_regimes ? fmt::format("{}", *r.n_regimes) : "-");
    row.push_back(r.algorithm);
    row.push_back(fixed4(r.tr_pct) + (r.best_tr ? "*" : ""));
    row.push_back(fixed4(r.mdd_pct) + (r.best_mdd ? "*" : ""));
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

  std::string out = fmt::format("{}\n", title);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    std::string line;
    for (std::size_t c = 0; c < cells[k].size(); ++c) {
      if (c > 0) line += " | ";
      line += fmt::format("{:<{}}", cells[k][c], width[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (k == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c > 0 ? 3 : 0);
      out += std::string(total, '-') + "\n";
    }
  }
  return out;
}

std::string format_csv(const Table& table) {
  std::string out = table.with_regime ? "rebalance,regime,algorithm,tr_pct,mdd_pct,best_tr,best_mdd\n"
                                      : "rebalance,algorithm,tr_pct,mdd_pct,best_tr,best_mdd\n";
  for (const auto& r : table.rows) {
    out += fmt::format("{}", r.period_days);
    if (table.with_regime) out += r.n_regimes ? fmt::format(",{}", *r.n_regimes) : ",";
    out += fmt::format(",{},{},{},{},{}\n", r.algorithm, fixed4(r.tr_pct), fixed4(r.mdd_pct), r.best_tr ? 1 : 0,
                       r.best_mdd ? 1 : 0);
  }
  return out;
}

std::string format_curve(const backtest::EquityCurve& curve) {
  std::string out = "date,value\n";
  for (std::size_t i = 0; i < curve.dates.size(); ++i) out += fmt::format("{},{}\n", curve.dates[i].iso(), curve.values[i]);
  return out;
}

}  // namespace ssaam::report
