#pragma once

#include <optional>

#include <Eigen/Dense>

#include "ssaam/conic.hpp"

namespace ssaam::optim {

/// T x N simple returns, one row per observation.
class ReturnsMatrix {
 public:
  explicit ReturnsMatrix(Eigen::MatrixXd r);

  const Eigen::MatrixXd& r() const { return r_; }
  Eigen::Index observations() const { return r_.rows(); }
  Eigen::Index assets() const { return r_.cols(); }
  Eigen::VectorXd mean() const { return r_.colwise().mean().transpose(); }
  /// Portfolio loss per observation, -r w.
  Eigen::VectorXd losses(const Eigen::VectorXd& w) const { return -(r_ * w); }
  ReturnsMatrix select_assets(const std::vector<int>& columns) const;

 private:
  Eigen::MatrixXd r_;
};

/// Daily simple returns from a price matrix (rows = dates).
ReturnsMatrix simple_returns(const Eigen::MatrixXd& prices);

/// Long-only weights on the unit simplex.
using Weights = Eigen::VectorXd;

struct RiskSpec {
  double alpha = 0.05;
  std::optional<double> mu_target;  // mean-return floor of the min-risk program
  std::optional<double> evar_cap;   // risk budget of the max-return program
};

struct ConeSolution {
  Weights w;
  double q = 0.0;
  double z = 0.0;
  Eigen::VectorXd u;
  double objective = 0.0;  // EVaR bound for min-risk, mean return for max-return
  SolveStatus status = SolveStatus::Optimal;
  int iterations = 0;
};

struct PortfolioSolution {
  Weights w;
  double objective = 0.0;
  SolveStatus status = SolveStatus::Optimal;
  int iterations = 0;
};

const ConicSolver& default_solver();

/// minimize q + z ln(1/(T alpha)) over simplex weights with
/// (-r_j w - q, z, u_j) in K_exp, sum u <= z and, when set, mean(w) >= mu_target.
ConeSolution min_evar_portfolio(const ReturnsMatrix& r, const RiskSpec& spec,
                                const ConicSolver& solver = default_solver());

/// maximize mean(w) subject to the same cone system bounded by spec.evar_cap.
ConeSolution max_return_evar_portfolio(const ReturnsMatrix& r, const RiskSpec& spec,
                                       const ConicSolver& solver = default_solver());

/// Rockafellar-Uryasev LP.
PortfolioSolution min_cvar_portfolio(const ReturnsMatrix& r, double alpha, std::optional<double> mu_target = {},
                                     const ConicSolver& solver = default_solver());

/// Long-only minimum variance on the sample covariance.
PortfolioSolution min_variance_portfolio(const ReturnsMatrix& r, std::optional<double> mu_target = {});

/// EVaR of the portfolio loss series.
double portfolio_evar(const ReturnsMatrix& r, const Weights& w, double alpha);

/// Euclidean projection onto the unit simplex.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

/// Solver-independent route for both EVaR programs: projected gradient on
/// the simplex for min EVaR(w) - beta * mean(w), with beta found by bisection
/// against the return floor or the risk cap. Used to cross-check the cone
/// programs.
struct FallbackOptions {
  int max_inner = 4000;
  int bisection_steps = 60;
  double tol = 1e-12;
};
PortfolioSolution min_evar_fallback(const ReturnsMatrix& r, const RiskSpec& spec, const FallbackOptions& opt = {});
PortfolioSolution max_return_evar_fallback(const ReturnsMatrix& r, const RiskSpec& spec,
                                           const FallbackOptions& opt = {});

}  // namespace ssaam::optim
