#include "ssaam/synth.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "ssaam/error.hpp"

namespace ssaam::synth {

namespace {

double laplace(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double v = u(rng);
  while (std::abs(v) >= 0.5) v = u(rng);
  return -scale * (v < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::abs(v));
}

}  // namespace

std::vector<Date> business_days(Date start, int count) {
  std::vector<Date> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  Date d = start;
  while (static_cast<int>(out.size()) < count) {
    if (d.weekday() < 5) out.push_back(d);
    d = Date(d.ordinal() + 1);
  }
  return out;
}

Dataset make_dataset(const DatasetOptions& o) {
  if (o.n_assets < 1 || o.n_days < 2 || o.n_regimes < 1)
    throw Error(ErrorCode::InvalidArgument, "synthetic dataset needs assets, days and regimes");
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::student_t_distribution<double> heavy(4.0);

  const auto dates = business_days(o.start, o.n_days);
  const auto T = static_cast<std::size_t>(o.n_days);

  // Latent sentiment: regime means plus Laplace AR(1) noise.
  std::vector<double> level(static_cast<std::size_t>(o.n_regimes));
  for (auto& m : level) m = 2.0 * uniform(rng) - 1.0;
  std::vector<double> s(T);
  double ar = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto k = t * static_cast<std::size_t>(o.n_regimes) / T;
    ar = 0.6 * ar + laplace(rng, 0.35);
    s[t] = level[k] + ar;
  }

  // Prices: drift, loading on yesterday's sentiment, heavy-tailed noise.
  Dataset out;
  out.sentiment = s;
  out.prices.dates = dates;
  const auto N = static_cast<Eigen::Index>(o.n_assets);
  for (int i = 0; i < o.n_assets; ++i) out.prices.tickers.push_back(fmt::format("A{:02d}", i + 1));
  out.prices.values.resize(static_cast<Eigen::Index>(T), N);
  Eigen::VectorXd drift(N), beta(N), vol(N), p(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    drift(i) = 0.0002 + 0.0004 * uniform(rng);
    beta(i) = 0.5 + uniform(rng);
    vol(i) = 0.008 + 0.012 * uniform(rng);
    p(i) = 20.0 + 180.0 * uniform(rng);
  }
  const double market_share = 0.5;
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0) {
      const double market = heavy(rng) / std::sqrt(2.0);
      for (Eigen::Index i = 0; i < N; ++i) {
        const double idio = heavy(rng) / std::sqrt(2.0);
        const double noise = std::sqrt(market_share) * market + std::sqrt(1.0 - market_share) * idio;
        const double r = drift(i) + o.lead * beta(i) * s[t - 1] + vol(i) * noise;
        p(i) *= std::max(1.0 + r, 0.05);
      }
    }
    out.prices.values.row(static_cast<Eigen::Index>(t)) = p.transpose();
  }

  // Sentence scores shifted by the same day's sentiment.
  std::poisson_distribution<int> count(o.sentences_per_day);
  auto emit = [&](Date d, int n, double sentiment) {
    for (int j = 0; j < n; ++j) {
      const double pll = -45.0 + 6.0 * sentiment + 8.0 * normal(rng);
      out.scores.rows.push_back({d, fmt::format("{}-{:03d}", d.iso(), j), pll});
    }
  };
  for (std::size_t t = 0; t < T; ++t) {
    emit(dates[t], 2 + count(rng), s[t]);
    if (o.weekend_news && dates[t].weekday() == 4 && t % 3 == 0) emit(Date(dates[t].ordinal() + 1), 2, s[t]);
  }
  return out;
}

Eigen::MatrixXd simulate_var_lingam(const Eigen::MatrixXd& b0, const Eigen::MatrixXd& b1, int samples,
                                    std::uint64_t seed, double scale) {
  const Eigen::Index d = b0.rows();
  if (b0.cols() != d || b1.rows() != d || b1.cols() != d) throw Error(ErrorCode::InvalidArgument, "B0/B1 shape");
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be positive");
  const Eigen::MatrixXd mix = (Eigen::MatrixXd::Identity(d, d) - b0).inverse();
  std::mt19937_64 rng(seed);
  constexpr int burn_in = 200;
  Eigen::MatrixXd out(samples, d);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d), e(d);
  for (int t = -burn_in; t < samples; ++t) {
    for (Eigen::Index k = 0; k < d; ++k) e(k) = laplace(rng, scale);
    x = mix * (b1 * x + e);
    if (t >= 0) out.row(t) = x.transpose();
  }
  return out;
}

}  // namespace ssaam::synth
