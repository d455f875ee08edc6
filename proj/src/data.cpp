#include "ssaam/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ssaam/error.hpp"

namespace ssaam::data {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

bool blank_line(const std::string& line) { return trim(line).empty(); }

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  return in;
}

void check_strictly_increasing(const std::vector<Date>& dates, std::string_view source) {
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (dates[i] == dates[i - 1])
      throw Error(ErrorCode::DuplicateDate, fmt::format("{} in {}", dates[i].iso(), source));
  }
}

}  // namespace

Eigen::MatrixXd AlignedPanel::matrix() const {
  Eigen::MatrixXd m(dates.size(), 2);
  for (std::size_t t = 0; t < dates.size(); ++t) {
    m(static_cast<Eigen::Index>(t), 0) = index[t];
    m(static_cast<Eigen::Index>(t), 1) = portfolio[t];
  }
  return m;
}

PriceTable parse_price_table(std::istream& in, std::string_view source) {
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::NoParseableRows, fmt::format("{} is empty", source));
  const auto header = split_csv(line);
  if (header.size() < 2)
    throw Error(ErrorCode::ParseError, fmt::format("{}: header must be date,<ticker>,...", source));

  PriceTable table;
  for (std::size_t i = 1; i < header.size(); ++i) table.tickers.emplace_back(header[i]);
  const std::size_t n = table.tickers.size();

  std::vector<std::pair<Date, std::vector<double>>> rows;
  while (std::getline(in, line)) {
    if (blank_line(line)) continue;
    const auto cells = split_csv(line);
    std::optional<Date> date = Date::parse(cells[0]);
    bool ok = date.has_value() && cells.size() == n + 1;
    std::vector<double> prices(n);
    for (std::size_t i = 0; ok && i < n; ++i) {
      ok = parse_double(cells[i + 1], prices[i]) && prices[i] > 0.0;
    }
    if (!ok) {
      ++table.dropped_rows;
      continue;
    }
    rows.emplace_back(*date, std::move(prices));
  }
  if (rows.empty()) throw Error(ErrorCode::NoParseableRows, std::string(source));

  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    table.dates.push_back(rows[t].first);
    for (std::size_t i = 0; i < n; ++i)
      table.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = rows[t].second[i];
  }
  check_strictly_increasing(table.dates, source);
  return table;
}

PriceTable load_price_table(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_price_table(in, path.string());
}

void write_price_table(std::ostream& out, const PriceTable& table) {
  out << "date";
  for (const auto& t : table.tickers) out << ',' << t;
  out << '\n';
  for (std::size_t r = 0; r < table.dates.size(); ++r) {
    out << table.dates[r].iso();
    for (Eigen::Index c = 0; c < table.values.cols(); ++c)
      fmt::print(out, ",{}", table.values(static_cast<Eigen::Index>(r), c));
    out << '\n';
  }
}

ScoreTable parse_score_table(std::istream& in, std::string_view source) {
  ScoreTable table;
  std::string line;
  if (!std::getline(in, line)) return table;
  const auto header = split_csv(line);
  if (header.size() != 3 || header[0] != "date" || header[1] != "sentence_id" || header[2] != "pll")
    throw Error(ErrorCode::ParseError, fmt::format("{}: header must be date,sentence_id,pll", source));

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_line(line)) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3)
      throw Error(ErrorCode::ParseError, fmt::format("{}:{}: expected 3 cells", source, lineno));
    const auto date = Date::parse(cells[0]);
    if (!date) throw Error(ErrorCode::ParseError, fmt::format("{}:{}: bad date", source, lineno));
    double pll = 0.0;
    if (!parse_double(cells[2], pll))
      throw Error(ErrorCode::NonFiniteInput, fmt::format("{}:{}: pll '{}'", source, lineno, cells[2]));
    table.rows.push_back({*date, std::string(cells[1]), pll});
  }
  return table;
}

ScoreTable load_score_table(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_score_table(in, path.string());
}

void write_score_table(std::ostream& out, const ScoreTable& table) {
  out << "date,sentence_id,pll\n";
  for (const auto& row : table.rows) fmt::print(out, "{},{},{}\n", row.date.iso(), row.sentence_id, row.pll);
}

DatedSeries parse_series(std::istream& in, std::string_view source) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::NoParseableRows, fmt::format("{} is empty", source));
  if (split_csv(line).size() != 2)
    throw Error(ErrorCode::ParseError, fmt::format("{}: expected a date,<value> header", source));

  std::vector<std::pair<Date, double>> rows;
  while (std::getline(in, line)) {
    if (blank_line(line)) continue;
    const auto cells = split_csv(line);
    double v = 0.0;
    const auto date = cells.size() == 2 ? Date::parse(cells[0]) : std::nullopt;
    if (!date || !parse_double(cells[1], v)) continue;
    rows.emplace_back(*date, v);
  }
  if (rows.empty()) throw Error(ErrorCode::NoParseableRows, std::string(source));
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  DatedSeries s;
  for (const auto& [d, v] : rows) {
    s.dates.push_back(d);
    s.values.push_back(v);
  }
  check_strictly_increasing(s.dates, source);
  return s;
}

DatedSeries load_series(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_series(in, path.string());
}

void write_series(std::ostream& out, const DatedSeries& series, std::string_view value_header) {
  out << "date," << value_header << '\n';
  for (std::size_t i = 0; i < series.size(); ++i)
    fmt::print(out, "{},{}\n", series.dates[i].iso(), series.values[i]);
}

DatedSeries build_equal_weight_portfolio(const PriceTable& prices) {
  if (prices.dates.empty() || prices.tickers.empty())
    throw Error(ErrorCode::EmptyTable, "price table has no rows");
  DatedSeries s;
  s.dates = prices.dates;
  s.values.resize(prices.dates.size());
  for (Eigen::Index t = 0; t < prices.values.rows(); ++t) {
    // Sorted summation keeps the level independent of ticker order.
    std::vector<double> row(prices.values.row(t).begin(), prices.values.row(t).end());
    std::sort(row.begin(), row.end());
    s.values[static_cast<std::size_t>(t)] = std::accumulate(row.begin(), row.end(), 0.0);
  }
  return s;
}

AlignedPanel align_by_date(const DatedSeries& index, const DatedSeries& portfolio) {
  AlignedPanel panel;
  std::size_t i = 0, j = 0;
  while (i < index.size() && j < portfolio.size()) {
    if (index.dates[i] < portfolio.dates[j]) {
      ++i;
    } else if (portfolio.dates[j] < index.dates[i]) {
      ++j;
    } else {
      panel.dates.push_back(index.dates[i]);
      panel.index.push_back(index.values[i]);
      panel.portfolio.push_back(portfolio.values[j]);
      ++i;
      ++j;
    }
  }
  if (panel.dates.empty())
    throw Error(ErrorCode::EmptyIntersection, "index and portfolio share no dates");
  panel.dropped_index = index.size() - panel.size();
  panel.dropped_portfolio = portfolio.size() - panel.size();
  return panel;
}

PriceTable restrict_dates(const PriceTable& prices, const std::vector<Date>& dates) {
  PriceTable out;
  out.tickers = prices.tickers;
  out.values.resize(static_cast<Eigen::Index>(dates.size()), prices.values.cols());
  std::size_t j = 0;
  for (std::size_t i = 0; i < dates.size(); ++i) {
    while (j < prices.dates.size() && prices.dates[j] < dates[i]) ++j;
    if (j == prices.dates.size() || prices.dates[j] != dates[i])
      throw Error(ErrorCode::InvalidArgument, fmt::format("{} not in price table", dates[i].iso()));
    out.dates.push_back(dates[i]);
    out.values.row(static_cast<Eigen::Index>(i)) = prices.values.row(static_cast<Eigen::Index>(j));
  }
  return out;
}

}  // namespace ssaam::data
