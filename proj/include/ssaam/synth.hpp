#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ssaam/data.hpp"
#include "ssaam/date.hpp"

namespace ssaam::synth {

struct DatasetOptions {
  int n_assets = 10;
  int n_days = 1250;
  std::uint64_t seed = 42;
  Date start = Date::from_ymd(2015, 1, 5);
  int n_regimes = 8;             // regimes of the latent sentiment
  double sentences_per_day = 12.0;
  double lead = 0.004;           // return response to yesterday's sentiment
  bool weekend_news = true;      // adds a few non-trading-day scores
};

struct Dataset {
  data::PriceTable prices;
  data::ScoreTable scores;
  std::vector<double> sentiment;  // latent daily sentiment on the trading calendar
};

/// Business-day prices whose returns respond to the previous day's latent
/// sentiment, and sentence scores whose level tracks the same day's
/// sentiment, so the polarity index leads the portfolio.
Dataset make_dataset(const DatasetOptions& options = {});

/// x_t = B0 x_t + B1 x_{t-1} + e_t with independent Laplace(0, scale) noise,
/// after a burn-in of 200 samples. B0 must be strictly lower triangular up to
/// a permutation.
Eigen::MatrixXd simulate_var_lingam(const Eigen::MatrixXd& b0, const Eigen::MatrixXd& b1, int samples,
                                    std::uint64_t seed, double scale = 1.0);

/// Weekdays starting at `start` (moved forward to a weekday).
std::vector<Date> business_days(Date start, int count);

}  // namespace ssaam::synth
