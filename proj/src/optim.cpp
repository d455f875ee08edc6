#include "ssaam/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "ssaam/error.hpp"
#include "ssaam/risk.hpp"

namespace ssaam::optim {

ReturnsMatrix::ReturnsMatrix(Eigen::MatrixXd r) : r_(std::move(r)) {
  if (r_.rows() < 1 || r_.cols() < 1) throw Error(ErrorCode::InvalidArgument, "returns matrix is empty");
  if (!r_.allFinite()) throw Error(ErrorCode::NonFiniteInput, "returns matrix has non-finite entries");
}

ReturnsMatrix ReturnsMatrix::select_assets(const std::vector<int>& columns) const {
  Eigen::MatrixXd sub(r_.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = r_.col(columns[k]);
  return ReturnsMatrix(std::move(sub));
}

ReturnsMatrix simple_returns(const Eigen::MatrixXd& prices) {
  if (prices.rows() < 2) throw Error(ErrorCode::InsufficientSamples, "need two prices for one return");
  const Eigen::Index T = prices.rows() - 1;
  Eigen::MatrixXd r = prices.bottomRows(T).cwiseQuotient(prices.topRows(T)).array() - 1.0;
  return ReturnsMatrix(std::move(r));
}

const ConicSolver& default_solver() {
  static const BarrierSolver solver;
  return solver;
}

double portfolio_evar(const ReturnsMatrix& r, const Weights& w, double alpha) {
  const Eigen::VectorXd x = r.losses(w);
  return evar_scalar({x.data(), static_cast<std::size_t>(x.size())}, alpha).value;
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, fmt::format("alpha {} not in (0,1)", alpha));
}

std::vector<int> all_assets(Eigen::Index n) {
  std::vector<int> a(static_cast<std::size_t>(n));
  std::iota(a.begin(), a.end(), 0);
  return a;
}

Weights expand(const Eigen::VectorXd& sub, const std::vector<int>& assets, Eigen::Index n) {
  Weights w = Weights::Zero(n);
  for (std::size_t k = 0; k < assets.size(); ++k) w(assets[k]) = sub(static_cast<Eigen::Index>(k));
  return w;
}

// How the optional mean-return floor interacts with the simplex.
struct MeanFloor {
  bool infeasible = false;
  std::vector<int> assets;  // optimise over these columns only
  bool keep = false;        // floor stays as an inequality
  Eigen::VectorXd start;    // strictly interior on `assets`
};

MeanFloor resolve_mean_floor(const Eigen::VectorXd& mu, std::optional<double> target) {
  const Eigen::Index n = mu.size();
  MeanFloor mf;
  mf.assets = all_assets(n);
  mf.start = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (!target) return mf;

  Eigen::Index best = 0;
  const double top = mu.maxCoeff(&best);
  const double tol = 1e-12 * (1.0 + std::abs(top));
  if (*target > top + tol) {
    mf.infeasible = true;
    return mf;
  }
  if (*target >= top - tol) {
    // Only the best-mean assets can meet the floor; it then binds exactly.
    mf.assets.clear();
    for (Eigen::Index i = 0; i < n; ++i)
      if (mu(i) >= top - tol) mf.assets.push_back(static_cast<int>(i));
    mf.start = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(mf.assets.size()),
                                         1.0 / static_cast<double>(mf.assets.size()));
    return mf;
  }
  if (*target <= mu.minCoeff()) return mf;

  mf.keep = true;
  const double eq = mu.mean();
  if (eq <= *target) {
    const double theta = (0.5 * (*target + top) - eq) / (top - eq);
    mf.start *= (1.0 - theta);
    mf.start(best) += theta;
  }
  return mf;
}

struct EvarLayout {
  Eigen::Index n_assets, n_obs;
  int q() const { return static_cast<int>(n_assets); }
  int z() const { return static_cast<int>(n_assets) + 1; }
  int s() const { return static_cast<int>(n_assets) + 2; }
  int u(Eigen::Index j) const { return static_cast<int>(n_assets + 3 + j); }
  int size() const { return static_cast<int>(n_assets + 3 + n_obs); }
};

ConicProblem evar_problem(const ReturnsMatrix& r, double alpha, std::optional<double> mu_floor,
                          std::optional<double> cap, bool maximize_return) {
  const EvarLayout L{r.assets(), r.observations()};
  const Eigen::VectorXd mu = r.mean();
  const double log_term = std::log(1.0 / (static_cast<double>(L.n_obs) * alpha));

  ConicProblem p;
  p.num_vars = L.size();
  p.c = Eigen::VectorXd::Zero(p.num_vars);
  if (maximize_return) {
    p.c.head(L.n_assets) = -mu;
  } else {
    p.c(L.q()) = 1.0;
    p.c(L.z()) = log_term;
  }

  p.eq_a = Eigen::MatrixXd::Zero(2, p.num_vars);
  p.eq_a.row(0).head(L.n_assets).setOnes();
  p.eq_a(1, L.s()) = 1.0;
  p.eq_a(1, L.z()) = -1.0;
  for (Eigen::Index j = 0; j < L.n_obs; ++j) p.eq_a(1, L.u(j)) = 1.0;
  p.eq_b = Eigen::Vector2d(1.0, 0.0);

  for (Eigen::Index i = 0; i < L.n_assets; ++i) p.nonneg.push_back({{{static_cast<int>(i), 1.0}}, 0.0});
  p.nonneg.push_back({{{L.s(), 1.0}}, 0.0});
  if (mu_floor) {
    AffineExpr e{{}, -*mu_floor};
    for (Eigen::Index i = 0; i < L.n_assets; ++i) e.terms.emplace_back(static_cast<int>(i), mu(i));
    p.nonneg.push_back(std::move(e));
  }
  if (cap) p.nonneg.push_back({{{L.q(), -1.0}, {L.z(), -log_term}}, *cap});

  for (Eigen::Index j = 0; j < L.n_obs; ++j) {
    ExpConeConstraint k;
    for (Eigen::Index i = 0; i < L.n_assets; ++i) k.x.terms.emplace_back(static_cast<int>(i), -r.r()(j, i));
    k.x.terms.emplace_back(L.q(), -1.0);
    k.y.terms.emplace_back(L.z(), 1.0);
    k.z.terms.emplace_back(L.u(j), 1.0);
    p.exp_cones.push_back(std::move(k));
  }
  return p;
}

double log_sum_exp_scaled(const Eigen::VectorXd& x, double z) {
  const double top = x.maxCoeff();
  return top + z * std::log(((x.array() - top) / z).exp().sum());
}

// Interior point of the EVaR cone system around weights w0. Returns false if
// the risk cap leaves no room.
bool evar_start(const ReturnsMatrix& r, double alpha, const Eigen::VectorXd& w0, std::optional<double> cap,
                Eigen::VectorXd& start) {
  const EvarLayout L{r.assets(), r.observations()};
  const Eigen::VectorXd x = r.losses(w0);
  const double spread = x.maxCoeff() - x.mean();
  const double log_term = std::log(1.0 / (static_cast<double>(L.n_obs) * alpha));
  const EvarResult ev = evar_scalar({x.data(), static_cast<std::size_t>(x.size())}, alpha);
  const double z0 = std::max(ev.z, 1e-3 * spread + 1e-9);
  const double lse = log_sum_exp_scaled(x, z0);
  double kappa = 1.0;
  if (cap) {
    kappa = std::min(1.0, (*cap - (lse + z0 * log_term)) / (2.0 * z0));
    if (!(kappa > 0.0)) return false;
  }
  start = Eigen::VectorXd::Zero(L.size());
  start.head(L.n_assets) = w0;
  const double q0 = lse + z0 * kappa;
  start(L.q()) = q0;
  start(L.z()) = z0;
  double sum_u = 0.0;
  for (Eigen::Index j = 0; j < L.n_obs; ++j) {
    start(L.u(j)) = z0 * std::exp((x(j) - q0) / z0 + 0.5 * kappa);
    sum_u += start(L.u(j));
  }
  start(L.s()) = z0 - sum_u;
  return start(L.s()) > 0.0;
}

// Exact cone certificate for fixed weights.
ConeSolution point_solution(const ReturnsMatrix& r, const Weights& w, double alpha) {
  const Eigen::VectorXd x = r.losses(w);
  const EvarResult ev = evar_scalar({x.data(), static_cast<std::size_t>(x.size())}, alpha);
  ConeSolution s;
  s.w = w;
  s.z = ev.z > 0.0 ? ev.z : 1e-12 * (1.0 + std::abs(x.maxCoeff()));
  s.q = log_sum_exp_scaled(x, s.z);
  s.u = ((x.array() - s.q) / s.z).exp() * s.z;
  s.objective = s.q + s.z * std::log(1.0 / (static_cast<double>(x.size()) * alpha));
  return s;
}

ConeSolution from_result(const ReturnsMatrix& r, const ConicResult& res, const std::vector<int>& assets,
                         Eigen::Index n_total, bool maximize_return) {
  const EvarLayout L{r.assets(), r.observations()};
  ConeSolution s;
  s.w = expand(res.x.head(L.n_assets), assets, n_total);
  s.q = res.x(L.q());
  s.z = res.x(L.z());
  s.u = res.x.segment(L.u(0), L.n_obs);
  s.objective = maximize_return ? -res.objective : res.objective;
  s.status = res.status;
  s.iterations = res.iterations;
  return s;
}

ConeSolution infeasible_solution(Eigen::Index n) {
  ConeSolution s;
  s.w = Weights::Zero(n);
  s.status = SolveStatus::Infeasible;
  return s;
}

}  // namespace

ConeSolution min_evar_portfolio(const ReturnsMatrix& r, const RiskSpec& spec, const ConicSolver& solver) {
  check_alpha(spec.alpha);
  const Eigen::Index n = r.assets();
  if (n == 1) return point_solution(r, Weights::Ones(1), spec.alpha);

  const MeanFloor mf = resolve_mean_floor(r.mean(), spec.mu_target);
  if (mf.infeasible) return infeasible_solution(n);
  if (mf.assets.size() == 1) {
    ConeSolution s = point_solution(r, expand(Eigen::VectorXd::Ones(1), mf.assets, n), spec.alpha);
    return s;
  }
  const ReturnsMatrix sub = mf.assets.size() == static_cast<std::size_t>(n) ? r : r.select_assets(mf.assets);
  const ConicProblem p =
      evar_problem(sub, spec.alpha, mf.keep ? spec.mu_target : std::nullopt, std::nullopt, false);
  Eigen::VectorXd start;
  if (!evar_start(sub, spec.alpha, mf.start, std::nullopt, start))
    throw Error(ErrorCode::SolverFailure, "could not build an interior start");
  return from_result(sub, solver.solve(p, start), mf.assets, n, false);
}

ConeSolution max_return_evar_portfolio(const ReturnsMatrix& r, const RiskSpec& spec, const ConicSolver& solver) {
  check_alpha(spec.alpha);
  if (!spec.evar_cap) throw Error(ErrorCode::InvalidArgument, "max-return program needs an EVaR cap");
  const double cap = *spec.evar_cap;
  const Eigen::Index n = r.assets();
  const Eigen::VectorXd mu = r.mean();
  constexpr double kCapTol = 1e-6;

  auto with_return = [&](ConeSolution s) {
    s.objective = mu.dot(s.w);
    return s;
  };

  // The unconstrained maximiser: best-mean assets, least risky mix of them.
  ConeSolution best = min_evar_portfolio(r, RiskSpec{spec.alpha, mu.maxCoeff(), std::nullopt}, solver);
  if (portfolio_evar(r, best.w, spec.alpha) <= cap) return with_return(best);
  if (n == 1) return infeasible_solution(n);

  const ConeSolution least = min_evar_portfolio(r, RiskSpec{spec.alpha, std::nullopt, std::nullopt}, solver);
  const double floor = least.objective;
  if (cap < floor - kCapTol) return infeasible_solution(n);
  if (cap <= floor + kCapTol) return with_return(least);

  Eigen::VectorXd start;
  bool ok = false;
  for (double theta : {0.5, 0.2, 0.05, 0.01, 1e-3, 1e-4, 0.0}) {
    const Weights w0 = (1.0 - theta) * least.w + Weights::Constant(n, theta / static_cast<double>(n));
    if (evar_start(r, spec.alpha, w0, cap, start)) {
      ok = true;
      break;
    }
  }
  if (!ok) return with_return(least);
  const ConicProblem p = evar_problem(r, spec.alpha, std::nullopt, cap, true);
  ConeSolution s = from_result(r, solver.solve(p, start), all_assets(n), n, true);
  s.iterations += least.iterations + best.iterations;
  return s;
}

PortfolioSolution min_cvar_portfolio(const ReturnsMatrix& r, double alpha, std::optional<double> mu_target,
                                     const ConicSolver& solver) {
  check_alpha(alpha);
  const Eigen::Index n = r.assets();
  const Eigen::Index T = r.observations();
  auto cvar_of = [&](const Weights& w) {
    const Eigen::VectorXd x = r.losses(w);
    return conditional_value_at_risk({x.data(), static_cast<std::size_t>(T)}, alpha);
  };
  if (n == 1) return {Weights::Ones(1), cvar_of(Weights::Ones(1)), SolveStatus::Optimal, 0};

  const MeanFloor mf = resolve_mean_floor(r.mean(), mu_target);
  if (mf.infeasible) return {Weights::Zero(n), 0.0, SolveStatus::Infeasible, 0};
  if (mf.assets.size() == 1) {
    const Weights w = expand(Eigen::VectorXd::Ones(1), mf.assets, n);
    return {w, cvar_of(w), SolveStatus::Optimal, 0};
  }
  const ReturnsMatrix sub = mf.assets.size() == static_cast<std::size_t>(n) ? r : r.select_assets(mf.assets);
  const Eigen::Index m = sub.assets();
  const Eigen::VectorXd mu = sub.mean();

  // Variables: w (m), zeta, v (T).
  const int zeta = static_cast<int>(m);
  auto v = [&](Eigen::Index j) { return static_cast<int>(m + 1 + j); };
  ConicProblem p;
  p.num_vars = static_cast<int>(m + 1 + T);
  p.c = Eigen::VectorXd::Zero(p.num_vars);
  p.c(zeta) = 1.0;
  p.c.tail(T).setConstant(1.0 / (alpha * static_cast<double>(T)));
  p.eq_a = Eigen::MatrixXd::Zero(1, p.num_vars);
  p.eq_a.row(0).head(m).setOnes();
  p.eq_b = Eigen::VectorXd::Ones(1);
  for (Eigen::Index i = 0; i < m; ++i) p.nonneg.push_back({{{static_cast<int>(i), 1.0}}, 0.0});
  for (Eigen::Index j = 0; j < T; ++j) {
    p.nonneg.push_back({{{v(j), 1.0}}, 0.0});
    AffineExpr e{{{v(j), 1.0}, {zeta, 1.0}}, 0.0};
    for (Eigen::Index i = 0; i < m; ++i) e.terms.emplace_back(static_cast<int>(i), sub.r()(j, i));
    p.nonneg.push_back(std::move(e));
  }
  if (mf.keep) {
    AffineExpr e{{}, -*mu_target};
    for (Eigen::Index i = 0; i < m; ++i) e.terms.emplace_back(static_cast<int>(i), mu(i));
    p.nonneg.push_back(std::move(e));
  }

  const Eigen::VectorXd x = sub.losses(mf.start);
  const double slack = std::max(x.maxCoeff() - x.minCoeff(), 1e-8);
  Eigen::VectorXd start(p.num_vars);
  start.head(m) = mf.start;
  start(zeta) = x.mean();
  for (Eigen::Index j = 0; j < T; ++j) start(v(j)) = std::max(x(j) - x.mean(), 0.0) + slack;

  const ConicResult res = solver.solve(p, start);
  return {expand(res.x.head(m), mf.assets, n), res.objective, res.status, res.iterations};
}

PortfolioSolution min_variance_portfolio(const ReturnsMatrix& r, std::optional<double> mu_target) {
  const Eigen::Index n = r.assets();
  const Eigen::Index T = r.observations();
  const Eigen::MatrixXd centered = r.r().rowwise() - r.r().colwise().mean();
  const Eigen::MatrixXd cov =
      T > 1 ? Eigen::MatrixXd(centered.transpose() * centered / static_cast<double>(T - 1))
            : Eigen::MatrixXd(Eigen::MatrixXd::Zero(n, n));
  auto variance = [&](const Weights& w) { return w.dot(cov * w); };
  if (n == 1) return {Weights::Ones(1), variance(Weights::Ones(1)), SolveStatus::Optimal, 0};

  const MeanFloor mf = resolve_mean_floor(r.mean(), mu_target);
  if (mf.infeasible) return {Weights::Zero(n), 0.0, SolveStatus::Infeasible, 0};
  if (mf.assets.size() == 1) {
    const Weights w = expand(Eigen::VectorXd::Ones(1), mf.assets, n);
    return {w, variance(w), SolveStatus::Optimal, 0};
  }
  const auto m = static_cast<Eigen::Index>(mf.assets.size());
  Eigen::MatrixXd sub_cov(m, m);
  Eigen::VectorXd mu(m);
  const Eigen::VectorXd full_mu = r.mean();
  for (Eigen::Index a = 0; a < m; ++a) {
    mu(a) = full_mu(mf.assets[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < m; ++b)
      sub_cov(a, b) = cov(mf.assets[static_cast<std::size_t>(a)], mf.assets[static_cast<std::size_t>(b)]);
  }
  // Normalised so the gap tolerance is relative to the typical variance.
  const double scale = std::max(sub_cov.diagonal().mean(), 1e-300);

  ConicProblem p;
  p.num_vars = static_cast<int>(m);
  p.c = Eigen::VectorXd::Zero(m);
  p.quad = 2.0 * sub_cov / scale;
  p.eq_a = Eigen::MatrixXd::Ones(1, m);
  p.eq_b = Eigen::VectorXd::Ones(1);
  for (Eigen::Index i = 0; i < m; ++i) p.nonneg.push_back({{{static_cast<int>(i), 1.0}}, 0.0});
  if (mf.keep) {
    AffineExpr e{{}, -*mu_target};
    for (Eigen::Index i = 0; i < m; ++i) e.terms.emplace_back(static_cast<int>(i), mu(i));
    p.nonneg.push_back(std::move(e));
  }
  BarrierOptions opt;
  opt.gap_tol = 1e-10;
  const ConicResult res = BarrierSolver(opt).solve(p, mf.start);
  const Weights w = expand(res.x, mf.assets, n);
  return {w, variance(w), res.status, res.iterations};
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

namespace {

// EVaR(w) and a (sub)gradient by the envelope theorem.
double evar_with_gradient(const ReturnsMatrix& r, const Weights& w, double alpha, Eigen::VectorXd& grad) {
  const Eigen::VectorXd x = r.losses(w);
  const EvarResult ev = evar_scalar({x.data(), static_cast<std::size_t>(x.size())}, alpha);
  Eigen::VectorXd p(x.size());
  if (ev.z > 0.0) {
    p = ((x.array() - x.maxCoeff()) / ev.z).exp();
  } else {
    Eigen::Index k = 0;
    x.maxCoeff(&k);
    p.setZero();
    p(k) = 1.0;
  }
  p /= p.sum();
  grad = -(r.r().transpose() * p);
  return ev.value;
}

// Projected gradient with backtracking for EVaR(w) - beta * mu'w.
Weights penalised_min(const ReturnsMatrix& r, double alpha, double beta, Weights w, const FallbackOptions& opt) {
  const Eigen::VectorXd mu = r.mean();
  Eigen::VectorXd g;
  double step = 1.0;
  for (int it = 0; it < opt.max_inner; ++it) {
    const double f = evar_with_gradient(r, w, alpha, g) - beta * mu.dot(w);
    g -= beta * mu;
    Weights next;
    for (int bt = 0; bt < 60; ++bt) {
      next = project_simplex(w - step * g);
      const Eigen::VectorXd d = next - w;
      const double f_next = portfolio_evar(r, next, alpha) - beta * mu.dot(next);
      if (f_next <= f + g.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-15) break;
      step *= 0.5;
    }
    const double moved = (next - w).cwiseAbs().maxCoeff();
    w = next;
    if (moved < opt.tol) break;
    step *= 1.5;
  }
  return w;
}

}  // namespace

PortfolioSolution min_evar_fallback(const ReturnsMatrix& r, const RiskSpec& spec, const FallbackOptions& opt) {
  check_alpha(spec.alpha);
  const Eigen::Index n = r.assets();
  const MeanFloor mf = resolve_mean_floor(r.mean(), spec.mu_target);
  if (mf.infeasible) return {Weights::Zero(n), 0.0, SolveStatus::Infeasible, 0};
  const ReturnsMatrix sub = r.select_assets(mf.assets);
  const Eigen::VectorXd mu = sub.mean();

  Weights w = penalised_min(sub, spec.alpha, 0.0, mf.start, opt);
  if (mf.keep && mu.dot(w) < *spec.mu_target) {
    double lo = 0.0, hi = 1.0;
    Weights w_hi = penalised_min(sub, spec.alpha, hi, w, opt);
    while (mu.dot(w_hi) < *spec.mu_target && hi < 1e12) {
      hi *= 4.0;
      w_hi = penalised_min(sub, spec.alpha, hi, w_hi, opt);
    }
    for (int k = 0; k < opt.bisection_steps; ++k) {
      const double mid = 0.5 * (lo + hi);
      const Weights wm = penalised_min(sub, spec.alpha, mid, w_hi, opt);
      if (mu.dot(wm) >= *spec.mu_target) {
        hi = mid;
        w_hi = wm;
      } else {
        lo = mid;
      }
    }
    w = w_hi;
  }
  const Weights full = expand(w, mf.assets, n);
  return {full, portfolio_evar(r, full, spec.alpha), SolveStatus::Optimal, 0};
}

PortfolioSolution max_return_evar_fallback(const ReturnsMatrix& r, const RiskSpec& spec, const FallbackOptions& opt) {
  check_alpha(spec.alpha);
  if (!spec.evar_cap) throw Error(ErrorCode::InvalidArgument, "max-return program needs an EVaR cap");
  const double cap = *spec.evar_cap;
  const Eigen::VectorXd mu = r.mean();
  const Eigen::Index n = r.assets();

  const PortfolioSolution best = min_evar_fallback(r, RiskSpec{spec.alpha, mu.maxCoeff(), std::nullopt}, opt);
  if (best.objective <= cap) return {best.w, mu.dot(best.w), SolveStatus::Optimal, 0};

  Weights w_lo = penalised_min(r, spec.alpha, 0.0, Weights::Constant(n, 1.0 / static_cast<double>(n)), opt);
  if (portfolio_evar(r, w_lo, spec.alpha) > cap + 1e-9) return {Weights::Zero(n), 0.0, SolveStatus::Infeasible, 0};

  double lo = 0.0, hi = 1.0;
  Weights w_hi = penalised_min(r, spec.alpha, hi, w_lo, opt);
  while (portfolio_evar(r, w_hi, spec.alpha) <= cap && hi < 1e12) {
    lo = hi;
    w_lo = w_hi;
    hi *= 4.0;
    w_hi = penalised_min(r, spec.alpha, hi, w_hi, opt);
  }
  for (int k = 0; k < opt.bisection_steps; ++k) {
    const double mid = 0.5 * (lo + hi);
    const Weights wm = penalised_min(r, spec.alpha, mid, w_lo, opt);
    if (portfolio_evar(r, wm, spec.alpha) <= cap) {
      lo = mid;
      w_lo = wm;
    } else {
      hi = mid;
    }
  }
  return {w_lo, mu.dot(w_lo), SolveStatus::Optimal, 0};
}

}  // namespace ssaam::optim
