#include <set>

#include <gtest/gtest.h>

#include "ssaam/causal.hpp"
#include "ssaam/data.hpp"
#include "ssaam/synth.hpp"

using namespace ssaam;

TEST(BusinessDays, WeekdaysOnlyAndConsecutive) {
  const auto d = synth::business_days(Date::from_ymd(2021, 1, 2), 30);  // a Saturday
  ASSERT_EQ(d.size(), 30u);
  EXPECT_EQ(d.front(), Date::from_ymd(2021, 1, 4));
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_LT(d[i].weekday(), 5);
    if (i > 0) EXPECT_EQ(d[i].ordinal() - d[i - 1].ordinal(), d[i].weekday() == 0 ? 3 : 1);
  }
}

TEST(Dataset, ShapesAndDeterminism) {
  synth::DatasetOptions o;
  o.n_assets = 3;
  o.n_days = 200;
  o.seed = 5;
  const auto a = synth::make_dataset(o);
  const auto b = synth::make_dataset(o);
  EXPECT_EQ(a.prices.values.rows(), 200);
  EXPECT_EQ(a.prices.values.cols(), 3);
  EXPECT_EQ(a.prices.tickers.size(), 3u);
  EXPECT_EQ(a.sentiment.size(), 200u);
  EXPECT_GT(a.prices.values.minCoeff(), 0.0);
  EXPECT_EQ(a.prices.values, b.prices.values);
  ASSERT_EQ(a.scores.rows.size(), b.scores.rows.size());
  for (std::size_t i = 0; i < a.scores.rows.size(); ++i) EXPECT_EQ(a.scores.rows[i].pll, b.scores.rows[i].pll);
  o.seed = 6;
  EXPECT_NE(synth::make_dataset(o).prices.values, a.prices.values);
}

TEST(Dataset, WeekendNewsOutsideTradingCalendar) {
  synth::DatasetOptions o;
  o.n_assets = 2;
  o.n_days = 250;
  const auto d = synth::make_dataset(o);
  std::set<int> weekend;
  for (const auto& r : d.scores.rows)
    if (r.date.weekday() >= 5) weekend.insert(r.date.ordinal());
  EXPECT_FALSE(weekend.empty());
  o.weekend_news = false;
  for (const auto& r : synth::make_dataset(o).scores.rows) EXPECT_LT(r.date.weekday(), 5);
}

TEST(Dataset, CsvRoundTrip) {
  synth::DatasetOptions o;
  o.n_assets = 2;
  o.n_days = 40;
  const auto d = synth::make_dataset(o);
  std::stringstream s;
  data::write_price_table(s, d.prices);
  const auto back = data::parse_price_table(s);
  EXPECT_EQ(back.dates, d.prices.dates);
  EXPECT_EQ(back.values, d.prices.values);
}

TEST(SimulateVarLingam, RecoveredByEstimator) {
  Eigen::Matrix2d b0, b1;
  b0 << 0, 0, 0.6, 0;
  b1 << 0.3, 0, 0.25, 0.2;
  const auto x = synth::simulate_var_lingam(b0, b1, 5000, 11);
  ASSERT_EQ(x.rows(), 5000);
  const auto g = causal::var_lingam(x, {"a", "b"}, 1, 0.05);
  EXPECT_NEAR(g.b[0](1, 0), 0.6, 0.1);
  EXPECT_EQ(g.b[0](0, 1), 0.0);
  EXPECT_NEAR(g.b[1](1, 0), 0.25, 0.1);
  EXPECT_EQ(g.b[1](0, 1), 0.0);
}
