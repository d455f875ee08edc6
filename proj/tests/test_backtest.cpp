#include <random>

#include <gtest/gtest.h>

#include "ssaam/backtest.hpp"
#include "ssaam/error.hpp"
#include "ssaam/synth.hpp"

using namespace ssaam;
using namespace ssaam::backtest;

namespace {

std::vector<Date> calendar(int n) { return synth::business_days(Date::from_ymd(2020, 1, 1), n); }

std::vector<std::size_t> offsets(const RebalanceSchedule& s) {
  std::vector<std::size_t> out;
  for (const auto& e : s.entries) out.push_back(e.offset);
  return out;
}

data::PriceTable table(const Eigen::MatrixXd& values) {
  data::PriceTable p;
  p.dates = calendar(static_cast<int>(values.rows()));
  for (Eigen::Index i = 0; i < values.cols(); ++i) p.tickers.push_back("A" + std::to_string(i));
  p.values = values;
  return p;
}

data::PriceTable random_walk(std::uint64_t seed, int days, int assets) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0003, 0.012);
  Eigen::MatrixXd v(days, assets);
  for (int i = 0; i < assets; ++i) {
    v(0, i) = 50.0 + 10.0 * i;
    for (int t = 1; t < days; ++t) v(t, i) = v(t - 1, i) * (1.0 + nd(rng));
  }
  return table(v);
}

RebalanceSchedule periodic_from(const data::PriceTable& p, std::size_t first, std::size_t period,
                                const std::vector<cpd::Regime>& regimes = {}) {
  const std::vector<Date> tradable(p.dates.begin() + static_cast<std::ptrdiff_t>(first), p.dates.end());
  return build_schedule(tradable, period, regimes);
}

EquityCurve curve_of(std::vector<double> values, double initial) {
  EquityCurve c;
  c.values = std::move(values);
  c.initial_capital = initial;
  c.bought = initial;
  return c;
}

// Worst (trough - peak) / peak over all pairs with the peak first.
double drawdown_oracle(const std::vector<double>& v) {
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i; j < v.size(); ++j) worst = std::min(worst, (v[j] - v[i]) / v[i]);
  return worst * 100.0;
}

StrategyConfig config(StrategyKind kind, std::size_t period, std::optional<std::size_t> regimes = {}) {
  StrategyConfig c;
  c.kind = kind;
  c.period_days = period;
  c.n_regimes = regimes;
  return c;
}

}  // namespace

TEST(Schedule, PeriodicOnly) {
  const auto s = build_schedule(calendar(100), 30, {});
  EXPECT_EQ(offsets(s), (std::vector<std::size_t>{0, 30, 60, 90}));
  for (const auto& e : s.entries) EXPECT_EQ(e.source, EntrySource::Periodic);
}

TEST(Schedule, UnionWithChangePoints) {
  const auto dates = calendar(100);
  const auto s = build_schedule(dates, 30, {{0, 50, cpd::Trend::Up}, {50, 100, cpd::Trend::Down}});
  EXPECT_EQ(offsets(s), (std::vector<std::size_t>{0, 30, 50, 60, 90}));
  EXPECT_EQ(s.entries[2].source, EntrySource::ChangePoint);
  EXPECT_EQ(s.entries[2].trend, cpd::Trend::Down);
  EXPECT_EQ(s.entries[2].date, dates[50]);
  EXPECT_EQ(s.entries[0].source, EntrySource::Periodic);
}

TEST(Schedule, CollisionKeepsChangePoint) {
  const auto s = build_schedule(calendar(100), 30, {{0, 60, cpd::Trend::Down}, {60, 100, cpd::Trend::Up}});
  EXPECT_EQ(offsets(s), (std::vector<std::size_t>{0, 30, 60, 90}));
  EXPECT_EQ(s.entries[2].source, EntrySource::ChangePoint);
  EXPECT_EQ(s.entries[2].trend, cpd::Trend::Up);
}

TEST(Schedule, Errors) {
  EXPECT_THROW(build_schedule({}, 30, {}), Error);
  EXPECT_THROW(build_schedule(calendar(5), 0, {}), Error);
}

TEST(SelectOptimizer, Mapping) {
  const ScheduleEntry periodic{0, Date(0), EntrySource::Periodic, std::nullopt};
  const ScheduleEntry up{1, Date(1), EntrySource::ChangePoint, cpd::Trend::Up};
  const ScheduleEntry down{2, Date(2), EntrySource::ChangePoint, cpd::Trend::Down};
  const auto pp = config(StrategyKind::CpdEvarPlusPlus, 30, 5);
  const auto p = config(StrategyKind::CpdEvarPlus, 30, 5);
  EXPECT_EQ(select_optimizer(pp, down), OptimizerMode::MaxReturnEvar);
  EXPECT_EQ(select_optimizer(pp, up), OptimizerMode::MinEvarWithTarget);
  EXPECT_EQ(select_optimizer(pp, periodic), OptimizerMode::MinEvarWithTarget);
  EXPECT_EQ(select_optimizer(p, down), OptimizerMode::MinEvarUnconstrained);
  EXPECT_EQ(select_optimizer(p, up), OptimizerMode::MinEvarWithTarget);
  EXPECT_EQ(select_optimizer(p, periodic), OptimizerMode::MinEvarWithTarget);
  EXPECT_EQ(select_optimizer(config(StrategyKind::Evar, 30), periodic), OptimizerMode::MinEvarWithTarget);
  EXPECT_EQ(select_optimizer(config(StrategyKind::Cvar, 30), periodic), OptimizerMode::MinCvar);
  for (const auto& e : {periodic, up, down}) {
    if (e.source == EntrySource::Periodic)
      EXPECT_EQ(select_optimizer(config(StrategyKind::Mv, 30), e), OptimizerMode::MinVariance);
    else
      for (auto k : {StrategyKind::Evar, StrategyKind::Cvar, StrategyKind::Mv})
        EXPECT_FALSE(select_optimizer(config(k, 30), e).has_value());
  }
}

TEST(Strategy, NamesRoundTrip) {
  for (auto k : {StrategyKind::CpdEvarPlusPlus, StrategyKind::CpdEvarPlus, StrategyKind::Evar, StrategyKind::Cvar,
                 StrategyKind::Mv})
    EXPECT_EQ(parse_strategy(strategy_name(k)), k);
  try {
    parse_strategy("EVaR+++");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownStrategy);
  }
}

TEST(Strategy, ValidateRegimeFields) {
  EXPECT_THROW(validate(config(StrategyKind::CpdEvarPlus, 30)), Error);
  EXPECT_THROW(validate(config(StrategyKind::Mv, 30, 5)), Error);
  EXPECT_THROW(validate(config(StrategyKind::Evar, 0)), Error);
  auto c = config(StrategyKind::Evar, 30);
  c.alpha = 1.0;
  EXPECT_THROW(validate(c), Error);
  EXPECT_NO_THROW(validate(config(StrategyKind::CpdEvarPlusPlus, 90, 10)));
}

TEST(StandardGrid, TwelvePlusNine) {
  const auto g = standard_grid();
  ASSERT_EQ(g.size(), 21u);
  for (std::size_t k = 0; k < 12; ++k) EXPECT_TRUE(is_cpd(g[k].kind));
  for (std::size_t k = 12; k < 21; ++k) EXPECT_FALSE(is_cpd(g[k].kind));
}

TEST(Metrics, TotalReturnFixtures) {
  EXPECT_NEAR(total_return(curve_of({100, 150}, 100)), 50.0, 1e-12);
  EXPECT_NEAR(total_return(curve_of({100, 100}, 100)), 0.0, 1e-12);
  EXPECT_NEAR(total_return(curve_of({100, 910.99}, 100)), 810.99, 1e-12);
  auto c = curve_of({1.0, 0.8}, 1.0);
  c.bought += 0.3;
  c.sold += 0.3;
  c.distributions = 0.05;
  EXPECT_NEAR(total_return(c), -15.0, 1e-12);
  EXPECT_THROW(total_return(EquityCurve{}), Error);
}

TEST(Metrics, DrawdownFixtures) {
  EXPECT_DOUBLE_EQ(max_drawdown(std::vector<double>{100, 120, 60, 80}), -50.0);
  EXPECT_DOUBLE_EQ(max_drawdown(std::vector<double>{100, 50, 200, 100}), -50.0);
  EXPECT_DOUBLE_EQ(max_drawdown(std::vector<double>{1, 2, 3, 4}), 0.0);
  EXPECT_DOUBLE_EQ(max_drawdown(std::vector<double>{5}), 0.0);
}

TEST(Metrics, DrawdownMatchesPairScan) {
  std::mt19937_64 rng(3);
  std::lognormal_distribution<double> step(0.0, 0.1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v{100.0};
    for (int i = 0; i < 60; ++i) v.push_back(v.back() * step(rng));
    const double mdd = max_drawdown(v);
    EXPECT_NEAR(mdd, drawdown_oracle(v), 1e-12);
    EXPECT_LE(mdd, 0.0);
    EXPECT_GE(mdd, -100.0);
  }
}

TEST(Backtest, SingleAssetDoubling) {
  Eigen::MatrixXd v(40, 1);
  for (int t = 0; t < 40; ++t) v(t, 0) = t < 20 ? 10.0 + 0.1 * t : 10.0 + 0.5 * (t - 19);
  v(39, 0) = 2.0 * v(10, 0);
  const auto p = table(v);
  for (auto kind : {StrategyKind::Evar, StrategyKind::Cvar, StrategyKind::Mv}) {
    const auto curve = run_backtest(p, periodic_from(p, 10, 5), config(kind, 5), 1.0, 10);
    EXPECT_NEAR(curve.values.back(), 2.0, 1e-12) << strategy_name(kind);
  }
}

TEST(Backtest, FlatPricesStayFlat) {
  const auto p = table(Eigen::MatrixXd::Constant(60, 2, 7.0).array() + Eigen::RowVector2d(0.0, 3.0).replicate(60, 1).array());
  const auto curve = run_backtest(p, periodic_from(p, 20, 10), config(StrategyKind::Mv, 10), 3.0, 20);
  for (double x : curve.values) EXPECT_NEAR(x, 3.0, 1e-12);
  EXPECT_NEAR(total_return(curve), 0.0, 1e-12);
}

TEST(Backtest, BuyAndHoldValuation) {
  const auto p = random_walk(4, 80, 3);
  const auto s = periodic_from(p, 30, 1000);  // one entry: the first date
  const auto curve = run_backtest(p, s, config(StrategyKind::Evar, 1000), 1.0, 30);
  ASSERT_EQ(curve.trades.size(), 2u);  // equal-weight seed, then the optimizer on the same close
  const Eigen::VectorXd w = curve.trades.back().new_weights;
  double expect = 0.0;
  for (int i = 0; i < 3; ++i) expect += w(i) / p.values(30, i) * p.values(79, i);
  EXPECT_NEAR(curve.values.back(), expect, 1e-12);
  EXPECT_EQ(curve.dates.front(), p.dates[30]);
  EXPECT_EQ(curve.dates.back(), p.dates.back());
  EXPECT_DOUBLE_EQ(curve.values.front(), 1.0);
}

TEST(Backtest, AccountingConservation) {
  const auto p = random_walk(5, 260, 4);
  const auto s = periodic_from(p, 60, 20, {{0, 50, cpd::Trend::Up}, {50, 120, cpd::Trend::Down}, {120, 200, cpd::Trend::Up}});
  for (auto kind : {StrategyKind::CpdEvarPlusPlus, StrategyKind::CpdEvarPlus}) {
    const auto curve = run_backtest(p, s, config(kind, 20, 3), 1.0, 60);
    ASSERT_GT(curve.trades.size(), 5u);
    for (std::size_t k = 1; k < curve.trades.size(); ++k) {
      const auto& t = curve.trades[k];
      EXPECT_NEAR(t.value_after, t.value_before, 1e-12 * t.value_before);
      EXPECT_NEAR(t.new_weights.sum(), 1.0, 1e-9);
      EXPECT_GE(t.new_weights.minCoeff(), 0.0);
    }
    // TR through the trade legs equals the plain valuation change.
    EXPECT_NEAR(total_return(curve), (curve.values.back() - 1.0) * 100.0, 1e-9);
    for (double x : curve.values) EXPECT_GT(x, 0.0);
  }
}

TEST(Backtest, UsesDownTrendModes) {
  const auto p = random_walk(6, 200, 3);
  const auto s = periodic_from(p, 60, 40, {{0, 30, cpd::Trend::Up}, {30, 140, cpd::Trend::Down}});
  const auto curve = run_backtest(p, s, config(StrategyKind::CpdEvarPlusPlus, 40, 2), 1.0, 60);
  bool saw = false;
  for (const auto& t : curve.trades)
    if (t.date == p.dates[90]) saw = t.mode == OptimizerMode::MaxReturnEvar;
  EXPECT_TRUE(saw);
}

TEST(Backtest, NoLookAhead) {
  const auto p = random_walk(7, 300, 4);
  const auto s = periodic_from(p, 60, 25, {{0, 70, cpd::Trend::Up}, {70, 240, cpd::Trend::Down}});
  const auto full = run_backtest(p, s, config(StrategyKind::CpdEvarPlusPlus, 25, 2), 1.0, 60);
  for (std::size_t cut : {100u, 150u, 200u}) {
    data::PriceTable head = p;
    head.dates.resize(cut + 1);
    head.values = p.values.topRows(static_cast<Eigen::Index>(cut + 1));
    RebalanceSchedule hs;
    for (const auto& e : s.entries)
      if (e.date <= head.dates.back()) hs.entries.push_back(e);
    const auto part = run_backtest(head, hs, config(StrategyKind::CpdEvarPlusPlus, 25, 2), 1.0, 60);
    ASSERT_LE(part.trades.size(), full.trades.size());
    for (std::size_t k = 0; k < part.trades.size(); ++k) {
      EXPECT_EQ(part.trades[k].date, full.trades[k].date);
      EXPECT_EQ(part.trades[k].new_weights, full.trades[k].new_weights) << "cut " << cut << " trade " << k;
    }
  }
}

TEST(Backtest, ComparatorsDifferOnlyThroughWeights) {
  // With one asset every optimizer returns [1], so identical schedules must
  // give identical curves.
  Eigen::MatrixXd v(120, 1);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(0.0, 0.02);
  v(0, 0) = 30.0;
  for (int t = 1; t < 120; ++t) v(t, 0) = v(t - 1, 0) * (1.0 + nd(rng));
  const auto p = table(v);
  const auto s = periodic_from(p, 40, 15);
  const auto a = run_backtest(p, s, config(StrategyKind::Evar, 15), 1.0, 40);
  for (auto kind : {StrategyKind::Cvar, StrategyKind::Mv}) {
    const auto b = run_backtest(p, s, config(kind, 15), 1.0, 40);
    EXPECT_EQ(a.values, b.values);
  }
}

TEST(Backtest, RejectsShortHistory) {
  const auto p = random_walk(9, 50, 2);
  EXPECT_THROW(run_backtest(p, periodic_from(p, 10, 10), config(StrategyKind::Mv, 10), 1.0, 20), Error);
}

TEST(Grid, SerialMatchesParallel) {
  synth::DatasetOptions o;
  o.n_assets = 4;
  o.n_days = 260;
  const auto ds = synth::make_dataset(o);
  GridInputs in{ds.prices, ds.sentiment, 120, 1.0, false};
  std::vector<StrategyConfig> configs{config(StrategyKind::CpdEvarPlusPlus, 30, 5),
                                      config(StrategyKind::CpdEvarPlus, 30, 5), config(StrategyKind::Evar, 30),
                                      config(StrategyKind::Cvar, 30), config(StrategyKind::Mv, 30)};
  const auto serial = run_grid(in, configs, Exec::Serial);
  const auto parallel = run_grid(in, configs, Exec::Parallel, 2);
  ASSERT_EQ(serial.size(), configs.size());
  for (std::size_t k = 0; k < configs.size(); ++k) {
    EXPECT_EQ(serial[k].curve.values, parallel[k].curve.values);
    EXPECT_EQ(serial[k].strategy.kind, configs[k].kind);
    EXPECT_GE(serial[k].tr_pct, -100.0);
    EXPECT_LE(serial[k].mdd_pct, 0.0);
    EXPECT_GE(serial[k].mdd_pct, -100.0);
  }
}

TEST(Grid, ScheduleStartsAfterLookback) {
  synth::DatasetOptions o;
  o.n_assets = 3;
  o.n_days = 300;
  const auto ds = synth::make_dataset(o);
  GridInputs in{ds.prices, ds.sentiment, 100, 1.0, false};
  for (bool wf : {false, true}) {
    in.walk_forward = wf;
    const auto s = schedule_for(in, config(StrategyKind::CpdEvarPlusPlus, 30, 5));
    EXPECT_EQ(s.entries.front().date, ds.prices.dates[100]);
    for (std::size_t k = 1; k < s.entries.size(); ++k) EXPECT_LT(s.entries[k - 1].date, s.entries[k].date);
  }
  in.index.pop_back();
  EXPECT_THROW(schedule_for(in, config(StrategyKind::Mv, 30)), Error);
}
