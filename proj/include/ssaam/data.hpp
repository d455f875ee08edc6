#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ssaam/date.hpp"

namespace ssaam::data {

/// Adjusted close prices, one row per trading date, one column per ticker.
struct PriceTable {
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd values;  // dates.size() x tickers.size(), all > 0
  std::size_t dropped_rows = 0;

  std::size_t size() const { return dates.size(); }
};

struct ScoreRow {
  Date date;
  std::string sentence_id;
  double pll = 0.0;
};

/// Per-sentence pseudo-log-likelihood scores, as emitted by the scorer.
struct ScoreTable {
  std::vector<ScoreRow> rows;
};

/// A dated scalar series. Dates are strictly increasing.
struct DatedSeries {
  std::vector<Date> dates;
  std::vector<double> values;

  std::size_t size() const { return dates.size(); }
};

struct AlignedPanel {
  std::vector<Date> dates;
  std::vector<double> index;
  std::vector<double> portfolio;
  std::size_t dropped_index = 0;
  std::size_t dropped_portfolio = 0;

  std::size_t size() const { return dates.size(); }
  /// T x 2 matrix with columns (index, portfolio).
  Eigen::MatrixXd matrix() const;
};

PriceTable parse_price_table(std::istream& in, std::string_view source = "<stream>");
PriceTable load_price_table(const std::filesystem::path& path);
/// Canonical form: `date,<tickers...>` with round-trip precision.
void write_price_table(std::ostream& out, const PriceTable& table);

/// Rows must all parse; an empty stream yields an empty table.
ScoreTable parse_score_table(std::istream& in, std::string_view source = "<stream>");
ScoreTable load_score_table(const std::filesystem::path& path);
void write_score_table(std::ostream& out, const ScoreTable& table);

/// Reads a two-column `date,<value>` CSV such as the polarity index file.
DatedSeries parse_series(std::istream& in, std::string_view source = "<stream>");
DatedSeries load_series(const std::filesystem::path& path);
void write_series(std::ostream& out, const DatedSeries& series, std::string_view value_header);

/// Level per date = sum of adjusted closes (one unit held of every stock).
DatedSeries build_equal_weight_portfolio(const PriceTable& prices);

/// Inner join on date.
AlignedPanel align_by_date(const DatedSeries& index, const DatedSeries& portfolio);

/// Rows of `prices` whose date is in `dates` (which must be a subset).
PriceTable restrict_dates(const PriceTable& prices, const std::vector<Date>& dates);

}  // namespace ssaam::data
