// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// check fails. Tolerances and runtime limits are fixed here.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "commands.hpp"
#include "cpd_fixture.hpp"
#include "lingam_fixture.hpp"
#include "oracles.hpp"
#include "ssaam/backtest.hpp"
#include "ssaam/causal.hpp"
#include "ssaam/cpd.hpp"
#include "ssaam/risk.hpp"
#include "ssaam/sentiment.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace ssaam;

namespace {

struct Check {
  bool ok = true;
  std::string detail;
};

std::vector<double> mixed_sample(std::mt19937_64& rng, int T) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::lognormal_distribution<double> ln(0.0, 0.75);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> x(static_cast<std::size_t>(T));
  for (auto& v : x) v = coin(rng) ? nd(rng) : ln(rng) - 1.0;
  return x;
}

std::span<const double> span_of(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// 1. VaR <= CVaR <= EVaR on 1,000 samples of T = 256, three alphas.
Check risk_ordering() {
  std::mt19937_64 rng(101);
  int violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < 1000; ++s) {
    const auto x = mixed_sample(rng, 256);
    for (double a : {0.01, 0.05, 0.25}) {
      const double v = optim::value_at_risk(x, a);
      const double c = optim::conditional_value_at_risk(x, a);
      const double e = optim::evar_scalar(x, a).value;
      worst = std::max({worst, v - c, c - e});
      if (v > c + 1e-8 || c > e + 1e-8) ++violations;
    }
  }
  return {violations == 0, fmt::format("3000 cases, {} violations, worst excess {:.3e}", violations, worst)};
}

// 2. evar_scalar against 1e5 log-spaced z points, relative 1e-6.
Check evar_grid() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  int below = 0;
  const double alphas[] = {0.01, 0.05, 0.25};
  for (int s = 0; s < 100; ++s) {
    const auto x = mixed_sample(rng, 100);
    const double a = alphas[s % 3];
    const double sd = test::sample_sd(x);
    const double got = optim::evar_scalar(x, a).value;
    const double grid = test::evar_grid(x, a, 1e-6 * sd, 1e3 * sd, 100000);
    worst = std::max(worst, std::abs(got - grid) / std::abs(grid));
    if (got > grid + 1e-12 * std::abs(grid)) ++below;
  }
  return {worst <= 1e-6 && below == 0,
          fmt::format("100 samples, max relative gap {:.3e}, grid below solver {} times", worst, below)};
}

// 3. Both EVaR programs against the 1e-3 simplex grid, 50 instances each of
// 2 and 3 assets.
Check cone_programs() {
  double worst_min = 0.0, worst_max = 0.0, worst_cap = 0.0;
  int status_bad = 0;
  for (int n : {2, 3}) {
    for (int k = 0; k < 50; ++k) {
      std::mt19937_64 rng(static_cast<std::uint64_t>(1000 * n + k));
      const auto r = test::random_returns(rng, 100, n);
      const double alpha = 0.05;
      const Eigen::VectorXd mu = r.mean();
      auto evar = [&](const Eigen::VectorXd& w) { return optim::evar_scalar(span_of(r.losses(w)), alpha).value; };

      const auto lo = optim::min_evar_portfolio(r, {alpha, std::nullopt, std::nullopt});
      const auto g_min = test::simplex_search(n, evar);
      const double cap = lo.objective + 0.5 * std::abs(lo.objective);
      const auto hi = optim::max_return_evar_portfolio(r, {alpha, std::nullopt, cap});
      const auto g_max = test::simplex_search(
          n, [&](const Eigen::VectorXd& w) { return evar(w) <= cap ? -mu.dot(w) : std::numeric_limits<double>::infinity(); });
      if (lo.status != optim::SolveStatus::Optimal || hi.status != optim::SolveStatus::Optimal || !g_max.found) {
        ++status_bad;
        continue;
      }
      worst_min = std::max(worst_min, std::abs(lo.objective - g_min.value));
      worst_max = std::max(worst_max, std::abs(hi.objective + g_max.value));
      worst_cap = std::max(worst_cap, evar(hi.w) - cap);
    }
  }
  return {status_bad == 0 && worst_min < 1e-3 && worst_max < 1e-3 && worst_cap <= 1e-6,
          fmt::format("100 instances, min-EVaR gap {:.2e}, max-return gap {:.2e}, cap excess {:.1e}, {} non-optimal",
                      worst_min, worst_max, worst_cap, status_bad)};
}

// 4. VAR-LiNGAM pattern recovery over 20 seeds per system.
Check lingam_recovery() {
  struct System {
    const char* name;
    Eigen::MatrixXd b0, b1;
  };
  const System systems[] = {{"2-var", test::two_var_b0(), test::two_var_b1()},
                            {"3-var", test::three_var_b0(), test::three_var_b1()}};
  Check c;
  for (const auto& s : systems) {
    int exact = 0;
    double abs_sum = 0.0;
    int edges = 0;
    const auto d = s.b0.rows();
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < d; ++i) names.push_back(fmt::format("x{}", i));
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto x = test::lingam_series(s.b0, s.b1, 5000, seed);
      const auto g = causal::var_lingam(x, names, 1, 0.05);
      bool same = true;
      for (int m = 0; m < 2; ++m) {
        const Eigen::MatrixXd& truth = m == 0 ? s.b0 : s.b1;
        for (Eigen::Index i = 0; i < d; ++i)
          for (Eigen::Index j = 0; j < d; ++j) {
            same = same && ((truth(i, j) != 0.0) == (g.b[static_cast<std::size_t>(m)](i, j) != 0.0));
            if (truth(i, j) != 0.0) {
              abs_sum += std::abs(g.b[static_cast<std::size_t>(m)](i, j) - truth(i, j));
              ++edges;
            }
          }
      }
      exact += same ? 1 : 0;
    }
    const double mae = abs_sum / edges;
    c.ok = c.ok && exact >= 18 && mae < 0.1;
    c.detail += fmt::format("{}{} pattern {}/20, MAE {:.4f}", c.detail.empty() ? "" : "; ", s.name, exact, mae);
  }
  return c;
}

// 5. Single split equals exhaustive search; multi-jump detection within 2.
Check binseg_exactness() {
  std::mt19937_64 rng(505);
  int mismatches = 0;
  for (int k = 0; k < 200; ++k) {
    const auto s = test::step_signal(rng, 200, 1, 2, 5.0);
    const auto b = cpd::binseg(s.y, 1, 2);
    if (b.indexes.front() != test::exhaustive_split(s.y, 2)) ++mismatches;
  }
  int misses = 0, jumps = 0;
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 4);
    const auto s = test::step_signal(rng, 200, n, 20, 5.0);
    const auto b = cpd::binseg(s.y, n, 2);
    for (std::size_t i = 0; i < n; ++i, ++jumps) {
      const auto got = b.indexes[i], want = s.jumps[i];
      if ((got > want ? got - want : want - got) > 2) ++misses;
    }
  }
  return {mismatches == 0 && misses == 0,
          fmt::format("200 single splits, {} mismatches; {} jumps, {} outside +-2", mismatches, jumps, misses)};
}

// 6. TR and MDD on hand-computed fixtures.
Check metric_fixtures() {
  struct Fixture {
    std::vector<double> values;
    double initial, bought, sold, distributions, tr, mdd;
  };
  const std::vector<Fixture> fixtures = {
      {{100, 120, 60, 80}, 100, 100, 0, 0, -20.0, -50.0},
      {{100, 150}, 100, 100, 0, 0, 50.0, 0.0},
      {{100, 100}, 100, 100, 0, 0, 0.0, 0.0},
      {{100, 910.99}, 100, 100, 0, 0, 810.99, 0.0},
      {{100, 50, 200, 100}, 100, 100, 0, 0, 0.0, -50.0},
      {{100, 90, 80, 70}, 100, 120, 20, 5, -25.0, -30.0},
      {{100, 110, 99, 121}, 100, 100, 0, 0, 21.0, -10.0},
      {{1, 2, 1, 4, 3}, 1, 1, 0, 0, 200.0, -50.0},
      {{100, 80, 90, 72, 100}, 100, 100, 0, 0, 0.0, -28.0},
      {{50, 60, 30, 45, 15, 75}, 50, 50, 0, 0, 50.0, -75.0},
  };
  int bad = 0;
  double worst = 0.0;
  for (const auto& f : fixtures) {
    backtest::EquityCurve c;
    c.values = f.values;
    c.initial_capital = f.initial;
    c.bought = f.bought;
    c.sold = f.sold;
    c.distributions = f.distributions;
    const double tr = backtest::total_return(c), mdd = backtest::max_drawdown(c);
    worst = std::max({worst, std::abs(tr - f.tr), std::abs(mdd - f.mdd)});
    if (std::abs(tr - f.tr) > 1e-12 || std::abs(mdd - f.mdd) > 1e-12) ++bad;
  }
  return {bad == 0, fmt::format("10 fixtures, {} off, max error {:.1e}", bad, worst)};
}

// 7. Golden grid on the bundled data: two CLI runs, byte-identical outputs,
// accounting conservation and MDD bounds for every CPD-EVaR++ run.
Check golden_run() {
  const fs::path config = fs::path(SSAAM_DATA_DIR) / "config.json";
  test::TempDir tmp;
  std::vector<double> seconds;
  for (const char* name : {"a", "b"}) {
    std::ostringstream out, err;
    const auto t0 = std::chrono::steady_clock::now();
    const int code = cli::run({"ssaam", "backtest", config.string(), "--out", (tmp / name).string()}, out, err);
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (code != 0) return {false, fmt::format("backtest exited {}: {}", code, err.str())};
  }
  int files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(tmp / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), tmp / "a");
    if (test::read_file(e.path()) != test::read_file(tmp / "b" / rel)) ++differing;
  }
  const std::string cpd_table = test::read_file(tmp / "a" / "backtest" / "cpd_table.csv");
  const std::string cmp_table = test::read_file(tmp / "a" / "backtest" / "comparison_table.csv");
  const auto rows = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n') - 1; };

  const auto cfg = cli::load_backtest_config(config);
  const auto inputs = cli::load_inputs(cfg);
  double worst_trade = 0.0, worst_mdd = 0.0;
  int runs = 0;
  bool bounds = true;
  for (const auto& s : cli::expand_grid(cfg)) {
    if (s.kind != backtest::StrategyKind::CpdEvarPlusPlus) continue;
    const auto r = backtest::run_strategy(inputs, s);
    ++runs;
    for (const auto& t : r.curve.trades)
      if (t.mode) worst_trade = std::max(worst_trade, std::abs(t.value_after - t.value_before) / t.value_before);
    bounds = bounds && r.mdd_pct <= 0.0 && r.mdd_pct >= -100.0;
    worst_mdd = std::min(worst_mdd, r.mdd_pct);
  }
  const double slowest = std::max(seconds[0], seconds[1]);
  return {differing == 0 && rows(cpd_table) == 12 && rows(cmp_table) == 9 && runs == 6 && worst_trade <= 1e-12 &&
              bounds && slowest < 300.0,
          fmt::format("runs {:.1f}s/{:.1f}s, {} files, {} differing, {}+{} table rows, {} CPD-EVaR++ runs, "
                      "max trade value change {:.1e}, worst MDD {:.4f}",
                      seconds[0], seconds[1], files, differing, rows(cpd_table), rows(cmp_table), runs, worst_trade,
                      worst_mdd)};
}

// 8. Label fractions on tie-free corpora and the boundary rule.
Check polarity() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(-40.0, 9.0);
    std::vector<double> pll(10000);
    for (auto& v : pll) v = nd(rng);
    if (std::set<double>(pll.begin(), pll.end()).size() != pll.size()) return {false, "corpus has ties"};
    const auto q = sentiment::compute_quartiles(pll);
    std::vector<int> labels(pll.size());
    sentiment::classify_all(pll, q, labels);
    const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1)) / 10000.0;
    const double neg = static_cast<double>(std::count(labels.begin(), labels.end(), -1)) / 10000.0;
    worst = std::max({worst, std::abs(pos - 0.25), std::abs(neg - 0.25)});
  }
  using sentiment::PolarityLabel;
  const sentiment::Quartiles q{-50.0, -30.0};
  const bool rule = sentiment::classify_polarity(-30.0, q) == PolarityLabel::Neutral &&
                    sentiment::classify_polarity(-50.0, q) == PolarityLabel::Neutral &&
                    sentiment::classify_polarity(-29.0, q) == PolarityLabel::Positive &&
                    sentiment::classify_polarity(-51.0, q) == PolarityLabel::Negative &&
                    sentiment::classify_polarity(std::nextafter(-30.0, 0.0), q) == PolarityLabel::Positive &&
                    sentiment::classify_polarity(std::nextafter(-50.0, -100.0), q) == PolarityLabel::Negative &&
                    sentiment::classify_polarity(-40.0, q) == PolarityLabel::Neutral;
  return {worst <= 0.001 && rule,
          fmt::format("5 corpora of 10000, max fraction error {:.4f}, boundary rule {}", worst, rule ? "exact" : "broken")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0 = no runtime limit
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "risk ordering", 10.0, risk_ordering},
      {2, "EVaR scalar oracle", 30.0, evar_grid},
      {3, "cone-program oracle", 120.0, cone_programs},
      {4, "VAR-LiNGAM recovery", 60.0, lingam_recovery},
      {5, "binseg exactness", 30.0, binseg_exactness},
      {6, "metric formulas", 0.0, metric_fixtures},
      {7, "end-to-end golden run", 0.0, golden_run},
      {8, "polarity construction", 0.0, polarity},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Check r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, fmt::format("exception: {}", e.what())};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit_s == 0.0 || s < c.limit_s;
    const bool ok = r.ok && in_time;
    failed += ok ? 0 : 1;
    std::cout << fmt::format("criterion {} {}: {} ({}; {:.1f}s{})", c.id, c.name, ok ? "PASS" : "FAIL", r.detail, s,
                             c.limit_s > 0.0 ? fmt::format(" of {:.0f}s", c.limit_s) : "")
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
