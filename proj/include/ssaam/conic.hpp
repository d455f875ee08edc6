#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ssaam::optim {

/// Sparse affine function  constant + sum(coef * x[var]).
struct AffineExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  double eval(const Eigen::VectorXd& x) const;
};

/// (x, y, z) in the exponential cone:  y * exp(x / y) <= z,  y > 0.
struct ExpConeConstraint {
  AffineExpr x, y, z;
};

/// minimize  c'x + 0.5 x'Px
/// s.t.      A x = b,  each nonneg expr >= 0,  each exp-cone triple in K_exp.
struct ConicProblem {
  int num_vars = 0;
  Eigen::VectorXd c;
  Eigen::MatrixXd quad;  // P; empty when the objective is linear
  Eigen::MatrixXd eq_a;
  Eigen::VectorXd eq_b;
  std::vector<AffineExpr> nonneg;
  std::vector<ExpConeConstraint> exp_cones;

  double objective(const Eigen::VectorXd& x) const;
  /// Largest violation over equalities, linear inequalities and cone
  /// memberships (cone violation measured as y*exp(x/y) - z).
  double max_violation(const Eigen::VectorXd& x) const;
  bool strictly_feasible(const Eigen::VectorXd& x) const;
};

enum class SolveStatus { Optimal, Infeasible, MaxIter };

const char* status_name(SolveStatus s);

struct ConicResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  double gap_bound = 0.0;  // barrier parameter / t at exit
  int iterations = 0;      // Newton steps
  SolveStatus status = SolveStatus::Optimal;
};

class ConicSolver {
 public:
  virtual ~ConicSolver() = default;
  /// `start` must satisfy every inequality and cone strictly.
  virtual ConicResult solve(const ConicProblem& problem, const Eigen::VectorXd& start) const = 0;
};

struct BarrierOptions {
  double feas_tol = 1e-6;
  double gap_tol = 1e-6;
  int max_iter = 10000;  // total Newton steps
  double t0 = 1.0;
  double t_growth = 10.0;
};

/// Primal log-barrier path following. Exponential cones use the
/// 3-self-concordant barrier -log(y log(z/y) - x) - log y - log z. Newton
/// systems eliminate variables that touch a single constraint and solve the
/// reduced dense KKT system by LU.
class BarrierSolver final : public ConicSolver {
 public:
  explicit BarrierSolver(BarrierOptions options = {}) : options_(options) {}
  ConicResult solve(const ConicProblem& problem, const Eigen::VectorXd& start) const override;
  const BarrierOptions& options() const { return options_; }

 private:
  BarrierOptions options_;
};

}  // namespace ssaam::optim
