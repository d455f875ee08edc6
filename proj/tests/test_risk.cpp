#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ssaam/error.hpp"
#include "ssaam/risk.hpp"

using namespace ssaam;
using namespace ssaam::optim;

namespace {

std::vector<double> mixed_sample(std::mt19937_64& rng, int T) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::lognormal_distribution<double> ln(0.0, 0.75);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> x(static_cast<std::size_t>(T));
  for (auto& v : x) v = coin(rng) ? nd(rng) : ln(rng) - 1.0;
  return x;
}

}  // namespace

TEST(VaR, MatchesSortOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = mixed_sample(rng, 37 + trial);
    for (double a : {0.01, 0.05, 0.1, 0.25, 0.5})
      EXPECT_EQ(value_at_risk(x, a), test::var_oracle(x, a));
  }
}

TEST(CVaR, MatchesRockafellarUryasevScan) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = mixed_sample(rng, 50 + trial);
    for (double a : {0.01, 0.05, 0.25, 0.7})
      EXPECT_NEAR(conditional_value_at_risk(x, a), test::cvar_oracle(x, a), 1e-12);
  }
}

TEST(CVaR, HandExample) {
  // alpha 0.5 of {1,2,3,4}: mean of the worst two.
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(value_at_risk(x, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(conditional_value_at_risk(x, 0.5), 3.5);
}

TEST(EVaR, ConstantLosses) {
  const std::vector<double> x(20, 0.7);
  for (double a : {0.01, 0.3, 0.9}) EXPECT_NEAR(evar_scalar(x, a).value, 0.7, 1e-12);
}

TEST(EVaR, TwoPointDistributionMatchesGrid) {
  const std::vector<double> x{0.0, 1.0};
  const double grid = test::evar_grid(x, 0.25, 1e-6, 1e3, 100000);
  EXPECT_NEAR(evar_scalar(x, 0.25).value, grid, 1e-6);
}

// The gap to the mean is about sd * sqrt(-2 ln alpha), 1.4e-3 sd at this
// alpha, so the 1e-4 bound applies to daily-return scale losses.
TEST(EVaR, AlphaNearOneApproachesMean) {
  std::mt19937_64 rng(3);
  auto x = mixed_sample(rng, 200);
  for (auto& v : x) v *= 0.02;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / 200.0;
  EXPECT_NEAR(evar_scalar(x, 1.0 - 1e-6).value, mean, 1e-4);
}

TEST(EVaR, TailMassOnMaximumGivesMaximum) {
  // A quarter of the mass sits on the maximum, so no z beats it at alpha 0.25.
  const std::vector<double> x{1, 2, 5, 5};
  const auto r = evar_scalar(x, 0.25);
  EXPECT_DOUBLE_EQ(r.value, 5.0);
  EXPECT_EQ(r.z, 0.0);
}

TEST(EVaR, ReturnedArgminEvaluatesToValue) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto x = mixed_sample(rng, 120);
    const auto r = evar_scalar(x, 0.05);
    ASSERT_GT(r.z, 0.0);
    EXPECT_NEAR(evar_objective(x, 0.05, r.z), r.value, 1e-12);
    EXPECT_NEAR(test::evar_at(x, 0.05, r.z), r.value, 1e-10);
  }
}

TEST(EVaR, MatchesDenseGrid) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = mixed_sample(rng, 256);
    const double s = test::sample_sd(x);
    for (double a : {0.01, 0.05, 0.25}) {
      const double got = evar_scalar(x, a).value;
      const double grid = test::evar_grid(x, a, 1e-6 * s, 1e3 * s, 100000);
      EXPECT_LE(got, grid + 1e-12 * std::abs(grid));
      EXPECT_LE(grid - got, 1e-6 * std::abs(grid));
    }
  }
}

TEST(RiskOrdering, VarBelowCvarBelowEvar) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = mixed_sample(rng, 256);
    for (double a : {0.01, 0.05, 0.25}) {
      const double v = value_at_risk(x, a), c = conditional_value_at_risk(x, a), e = evar_scalar(x, a).value;
      EXPECT_LE(v, c + 1e-8);
      EXPECT_LE(c, e + 1e-8);
    }
  }
}

TEST(EVaR, MonotoneInAlpha) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = mixed_sample(rng, 100);
    double prev = std::numeric_limits<double>::infinity();
    for (double a : {0.01, 0.02, 0.05, 0.1, 0.25, 0.5, 0.9}) {
      const double e = evar_scalar(x, a).value;
      EXPECT_LE(e, prev + 1e-10);
      prev = e;
    }
  }
}

TEST(EVaR, TranslationAndHomogeneity) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = mixed_sample(rng, 100);
    const double base = evar_scalar(x, 0.05).value;
    for (double c : {-3.0, 0.25, 10.0}) {
      std::vector<double> shifted = x;
      for (auto& v : shifted) v += c;
      EXPECT_NEAR(evar_scalar(shifted, 0.05).value, base + c, 1e-8);
    }
    for (double c : {0.1, 2.0, 7.5}) {
      std::vector<double> scaled = x;
      for (auto& v : scaled) v *= c;
      EXPECT_NEAR(evar_scalar(scaled, 0.05).value, c * base, 1e-8 * std::max(1.0, c));
    }
  }
}

TEST(EVaR, LargeLossesDoNotOverflow) {
  const std::vector<double> x{1e4, -1e4, 5e3, 0.0};
  const auto r = evar_scalar(x, 0.05);
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_LE(r.value, 1e4 + 1e-9);
}

TEST(RiskInputs, Rejected) {
  const std::vector<double> empty;
  const std::vector<double> x{1, 2};
  const std::vector<double> bad{1, std::nan("")};
  EXPECT_THROW(value_at_risk(empty, 0.05), Error);
  EXPECT_THROW(evar_scalar(x, 0.0), Error);
  EXPECT_THROW(evar_scalar(x, 1.0), Error);
  EXPECT_THROW(conditional_value_at_risk(bad, 0.05), Error);
}
