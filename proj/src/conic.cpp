#include "ssaam/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/LU>

#include "ssaam/error.hpp"

namespace ssaam::optim {

double AffineExpr::eval(const Eigen::VectorXd& x) const {
  double v = constant;
  for (const auto& [i, a] : terms) v += a * x(i);
  return v;
}

double ConicProblem::objective(const Eigen::VectorXd& x) const {
  double v = c.dot(x);
  if (quad.size() > 0) v += 0.5 * x.dot(quad * x);
  return v;
}

double ConicProblem::max_violation(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  if (eq_a.rows() > 0) worst = std::max(worst, (eq_a * x - eq_b).cwiseAbs().maxCoeff());
  for (const auto& g : nonneg) worst = std::max(worst, -g.eval(x));
  for (const auto& k : exp_cones) {
    const double cx = k.x.eval(x), cy = k.y.eval(x), cz = k.z.eval(x);
    worst = std::max(worst, -cy);
    if (cy > 0.0) worst = std::max(worst, cy * std::exp(cx / cy) - cz);
  }
  return worst;
}

bool ConicProblem::strictly_feasible(const Eigen::VectorXd& x) const {
  for (const auto& g : nonneg)
    if (!(g.eval(x) > 0.0)) return false;
  for (const auto& k : exp_cones) {
    const double cx = k.x.eval(x), cy = k.y.eval(x), cz = k.z.eval(x);
    if (!(cy > 0.0 && cz > 0.0)) return false;
    if (!(cy * std::log(cz / cy) - cx > 0.0)) return false;
  }
  return true;
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::MaxIter: return "max_iter";
  }
  return "unknown";
}

namespace {

double barrier_value(const ConicProblem& p, const Eigen::VectorXd& x) {
  const double inf = std::numeric_limits<double>::infinity();
  double phi = 0.0;
  for (const auto& g : p.nonneg) {
    const double v = g.eval(x);
    if (!(v > 0.0)) return inf;
    phi -= std::log(v);
  }
  for (const auto& k : p.exp_cones) {
    const double cx = k.x.eval(x), cy = k.y.eval(x), cz = k.z.eval(x);
    if (!(cy > 0.0 && cz > 0.0)) return inf;
    const double psi = cy * std::log(cz / cy) - cx;
    if (!(psi > 0.0)) return inf;
    phi -= std::log(psi) + std::log(cy) + std::log(cz);
  }
  return phi;
}

// Variables are split into "local" ones, no two of which share a constraint,
// and "global" ones. The Hessian block of the locals is then diagonal and is
// eliminated before the dense solve.
struct Partition {
  std::vector<int> slot;  // position inside the global or local block
  std::vector<bool> local;
  int n_global = 0;
  int n_local = 0;
};

Partition partition_variables(const ConicProblem& p) {
  const int n = p.num_vars;
  std::vector<std::vector<int>> groups;
  for (const auto& g : p.nonneg) {
    std::vector<int> v;
    for (const auto& [i, a] : g.terms) v.push_back(i);
    groups.push_back(std::move(v));
  }
  for (const auto& k : p.exp_cones) {
    std::vector<int> v;
    for (const AffineExpr* e : {&k.x, &k.y, &k.z})
      for (const auto& [i, a] : e->terms) v.push_back(i);
    groups.push_back(std::move(v));
  }
  for (auto& g : groups) {
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
  }

  std::vector<std::vector<int>> member(static_cast<std::size_t>(n));
  std::vector<std::size_t> neighbours(static_cast<std::size_t>(n), 0);
  for (std::size_t gi = 0; gi < groups.size(); ++gi)
    for (int i : groups[gi]) {
      member[static_cast<std::size_t>(i)].push_back(static_cast<int>(gi));
      neighbours[static_cast<std::size_t>(i)] += groups[gi].size() - 1;
    }

  std::vector<bool> quad_var(static_cast<std::size_t>(n), false);
  if (p.quad.size() > 0)
    for (int i = 0; i < n; ++i) quad_var[static_cast<std::size_t>(i)] = p.quad.row(i).cwiseAbs().maxCoeff() > 0.0;

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return neighbours[static_cast<std::size_t>(a)] < neighbours[static_cast<std::size_t>(b)];
  });

  Partition part;
  part.local.assign(static_cast<std::size_t>(n), false);
  std::vector<bool> group_taken(groups.size(), false);
  for (int i : order) {
    const auto& mem = member[static_cast<std::size_t>(i)];
    if (mem.empty() || quad_var[static_cast<std::size_t>(i)]) continue;
    bool ok = true;
    for (int gi : mem) ok = ok && !group_taken[static_cast<std::size_t>(gi)];
    if (!ok) continue;
    part.local[static_cast<std::size_t>(i)] = true;
    for (int gi : mem) group_taken[static_cast<std::size_t>(gi)] = true;
  }
  part.slot.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    part.slot[static_cast<std::size_t>(i)] = part.local[static_cast<std::size_t>(i)] ? part.n_local++ : part.n_global++;
  return part;
}

// Newton system [H A'; A 0] with the local block of H eliminated.
class NewtonSystem {
 public:
  NewtonSystem(const ConicProblem& p, Partition part)
      : p_(p), part_(std::move(part)), n_(p.num_vars), m_(static_cast<int>(p.eq_a.rows())) {
    const int g = part_.n_global, l = part_.n_local;
    a_g_ = Eigen::MatrixXd::Zero(m_, g);
    a_l_ = Eigen::MatrixXd::Zero(m_, l);
    for (int j = 0; j < n_; ++j) {
      const auto col = p.eq_a.col(j);
      if (part_.local[static_cast<std::size_t>(j)]) a_l_.col(part_.slot[static_cast<std::size_t>(j)]) = col;
      else a_g_.col(part_.slot[static_cast<std::size_t>(j)]) = col;
    }
    for (const auto& c : p.nonneg) {
      Compiled<1> cc;
      cc.constant(0) = c.constant;
      for (const auto& [i, a] : c.terms) merge(cc, i, 0, a);
      nonneg_.push_back(std::move(cc));
    }
    for (const auto& k : p.exp_cones) {
      Compiled<3> cc;
      const AffineExpr* comp[3] = {&k.x, &k.y, &k.z};
      for (int r = 0; r < 3; ++r) {
        cc.constant(r) = comp[r]->constant;
        for (const auto& [i, a] : comp[r]->terms) merge(cc, i, r, a);
      }
      cones_.push_back(std::move(cc));
    }
  }

  // Evaluates the barrier gradient and Hessian at x (plus tt times the
  // quadratic term) and factorizes the reduced system.
  void assemble(const Eigen::VectorXd& x, double tt) {
    const int g = part_.n_global, l = part_.n_local;
    barrier_grad_ = Eigen::VectorXd::Zero(n_);
    h_gg_ = Eigen::MatrixXd::Zero(g, g);
    h_gl_ = Eigen::MatrixXd::Zero(g, l);
    d_l_ = Eigen::VectorXd::Zero(l);
    if (p_.quad.size() > 0)
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
          if (p_.quad(i, j) != 0.0) add(i, j, tt * p_.quad(i, j));

    for (const auto& c : nonneg_) {
      double v = c.constant(0);
      for (const auto& e : c.entries) v += e.a(0) * x(e.var);
      const double inv = 1.0 / v;
      for (const auto& ei : c.entries) {
        barrier_grad_(ei.var) -= ei.a(0) * inv;
        for (const auto& ej : c.entries) add(ei, ej, ei.a(0) * ej.a(0) * inv * inv);
      }
    }
    for (const auto& c : cones_) {
      Eigen::Vector3d v = c.constant;
      for (const auto& e : c.entries) v += e.a * x(e.var);
      const double cx = v(0), cy = v(1), cz = v(2);
      const double lr = std::log(cz / cy);
      const double psi = cy * lr - cx;
      const Eigen::Vector3d dpsi(-1.0, lr - 1.0, cy / cz);
      Eigen::Matrix3d d2psi;
      d2psi << 0.0, 0.0, 0.0, 0.0, -1.0 / cy, 1.0 / cz, 0.0, 1.0 / cz, -cy / (cz * cz);
      const Eigen::Vector3d gr = -dpsi / psi - Eigen::Vector3d(0.0, 1.0 / cy, 1.0 / cz);
      Eigen::Matrix3d h = dpsi * dpsi.transpose() / (psi * psi) - d2psi / psi;
      h(1, 1) += 1.0 / (cy * cy);
      h(2, 2) += 1.0 / (cz * cz);
      for (const auto& ei : c.entries) {
        barrier_grad_(ei.var) += gr.dot(ei.a);
        const Eigen::Vector3d hai = h * ei.a;
        for (const auto& ej : c.entries) add(ei, ej, hai.dot(ej.a));
      }
    }

    // Reduced matrix [Hgg - Hgl D^-1 Hlg, Ag' - Hgl D^-1 Al'; sym, -Al D^-1 Al'].
    d_inv_ = d_l_.cwiseInverse();
    const Eigen::MatrixXd hgl_d = h_gl_ * d_inv_.asDiagonal();
    const Eigen::MatrixXd al_d = a_l_ * d_inv_.asDiagonal();
    Eigen::MatrixXd k(g + m_, g + m_);
    k.topLeftCorner(g, g) = h_gg_ - hgl_d * h_gl_.transpose();
    k.topRightCorner(g, m_) = a_g_.transpose() - hgl_d * a_l_.transpose();
    k.bottomLeftCorner(m_, g) = k.topRightCorner(g, m_).transpose();
    k.bottomRightCorner(m_, m_) = -al_d * a_l_.transpose();

    // Symmetric equilibration.
    scale_ = Eigen::VectorXd::Ones(g + m_);
    for (int pass = 0; pass < 3; ++pass) {
      Eigen::VectorXd d(g + m_);
      for (int i = 0; i < g + m_; ++i) {
        const double r = k.row(i).cwiseAbs().maxCoeff();
        d(i) = r > 0.0 ? 1.0 / std::sqrt(r) : 1.0;
      }
      k = d.asDiagonal() * k * d.asDiagonal();
      scale_.array() *= d.array();
    }
    reduced_ = k;
    lu_.compute(k);
  }

  const Eigen::VectorXd& barrier_grad() const { return barrier_grad_; }

  // Solves [H A'; A 0][dx; y] = [r; e] and returns dx.
  Eigen::VectorXd solve(const Eigen::VectorXd& r, const Eigen::VectorXd& e) const {
    const int g = part_.n_global, l = part_.n_local;
    Eigen::VectorXd r_g(g), r_l(l);
    for (int i = 0; i < n_; ++i) {
      const int sl = part_.slot[static_cast<std::size_t>(i)];
      if (part_.local[static_cast<std::size_t>(i)]) r_l(sl) = r(i);
      else r_g(sl) = r(i);
    }
    const Eigen::VectorXd dr = d_inv_.cwiseProduct(r_l);
    Eigen::VectorXd rhs(g + m_);
    rhs.head(g) = r_g - h_gl_ * dr;
    rhs.tail(m_) = e - a_l_ * dr;
    const Eigen::VectorXd b = scale_.cwiseProduct(rhs);
    Eigen::VectorXd y = lu_.solve(b);
    y += lu_.solve(b - reduced_ * y);
    y = scale_.cwiseProduct(y);
    const Eigen::VectorXd dx_g = y.head(g);
    const Eigen::VectorXd dx_l = d_inv_.cwiseProduct(r_l - h_gl_.transpose() * dx_g - a_l_.transpose() * y.tail(m_));
    Eigen::VectorXd dx(n_);
    for (int i = 0; i < n_; ++i) {
      const int sl = part_.slot[static_cast<std::size_t>(i)];
      dx(i) = part_.local[static_cast<std::size_t>(i)] ? dx_l(sl) : dx_g(sl);
    }
    return dx;
  }

 private:
  // A constraint with its variables' coefficients gathered per component.
  template <int K>
  struct Compiled {
    struct Entry {
      int var;
      int slot;
      bool local;
      Eigen::Matrix<double, K, 1> a;
    };
    Eigen::Matrix<double, K, 1> constant;
    std::vector<Entry> entries;
  };

  template <int K>
  void merge(Compiled<K>& c, int var, int component, double coef) {
    for (auto& e : c.entries)
      if (e.var == var) {
        e.a(component) += coef;
        return;
      }
    typename Compiled<K>::Entry e{var, part_.slot[static_cast<std::size_t>(var)], part_.local[static_cast<std::size_t>(var)],
                                  Eigen::Matrix<double, K, 1>::Zero()};
    e.a(component) = coef;
    c.entries.push_back(e);
  }

  template <class E>
  void add(const E& ei, const E& ej, double v) {
    if (!ei.local) {
      if (!ej.local) h_gg_(ei.slot, ej.slot) += v;
      else h_gl_(ei.slot, ej.slot) += v;
    } else if (ej.local) {
      d_l_(ei.slot) += v;  // the partition guarantees ei == ej here
    }
  }

  void add(int i, int j, double v) {
    const bool li = part_.local[static_cast<std::size_t>(i)], lj = part_.local[static_cast<std::size_t>(j)];
    const int si = part_.slot[static_cast<std::size_t>(i)], sj = part_.slot[static_cast<std::size_t>(j)];
    if (!li && !lj) h_gg_(si, sj) += v;
    else if (!li && lj) h_gl_(si, sj) += v;
    else if (li && lj) d_l_(si) += v;
  }

  std::vector<Compiled<1>> nonneg_;
  std::vector<Compiled<3>> cones_;

  const ConicProblem& p_;
  Partition part_;
  int n_, m_;
  Eigen::MatrixXd a_g_, a_l_, h_gg_, h_gl_, reduced_;
  Eigen::VectorXd barrier_grad_, d_l_, d_inv_, scale_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace

ConicResult BarrierSolver::solve(const ConicProblem& p, const Eigen::VectorXd& start) const {
  const int n = p.num_vars;
  const int m = static_cast<int>(p.eq_a.rows());
  if (start.size() != n || p.c.size() != n) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  if (p.eq_a.cols() != n && m > 0) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  if (!p.strictly_feasible(start)) throw Error(ErrorCode::InvalidArgument, "start point is not strictly feasible");

  const double nu = static_cast<double>(p.nonneg.size()) + 3.0 * static_cast<double>(p.exp_cones.size());
  const bool has_quad = p.quad.size() > 0;

  ConicResult res;
  res.x = start;
  Eigen::VectorXd& x = res.x;

  auto merit = [&](const Eigen::VectorXd& v, double tt) {
    const double phi = barrier_value(p, v);
    return std::isfinite(phi) ? tt * p.objective(v) + phi : std::numeric_limits<double>::infinity();
  };
  auto eq_residual = [&]() -> Eigen::VectorXd {
    if (m == 0) return Eigen::VectorXd(0);
    return p.eq_b - p.eq_a * x;
  };

  NewtonSystem sys(p, partition_variables(p));

  // Starting parameter: the t whose Newton decrement at the start point is
  // smallest, so the first centering begins close to the central path.
  double t = options_.t0;
  if (!has_quad) {
    sys.assemble(x, 0.0);
    const Eigen::VectorXd d1 = sys.solve(-p.c, Eigen::VectorXd::Zero(m));
    const Eigen::VectorXd d2 = sys.solve(-sys.barrier_grad(), eq_residual());
    const double a2 = -p.c.dot(d1);
    const double a1 = -(p.c.dot(d2) + sys.barrier_grad().dot(d1));
    if (a2 > 0.0 && a1 < 0.0) t = std::clamp(-a1 / (2.0 * a2), 1e-8, 1e12);
  }

  for (;;) {
    // Centering by damped Newton steps.
    for (;;) {
      if (res.iterations >= options_.max_iter) {
        res.status = SolveStatus::MaxIter;
        res.objective = p.objective(x);
        res.gap_bound = nu / t;
        return res;
      }
      ++res.iterations;

      sys.assemble(x, t);
      Eigen::VectorXd grad = t * p.c + sys.barrier_grad();
      if (has_quad) grad += t * (p.quad * x);
      const Eigen::VectorXd dx = sys.solve(-grad, eq_residual());

      const double slope = grad.dot(dx);
      const double decrement = -slope;
      // Intermediate centerings only need to stay near the path.
      const bool last = nu / t < options_.gap_tol;
      if (decrement / 2.0 <= (last ? 1e-9 : 1e-3)) break;

      double step = 1.0;
      int halvings = 0;
      const double f0 = merit(x, t);
      while (halvings < 60 && merit(x + step * dx, t) > f0 + 0.01 * step * slope) {
        step *= 0.5;
        ++halvings;
      }
      if (halvings == 60) break;
      x += step * dx;
      // Already well centred and the direction is only accurate to rounding:
      // further steps make no progress.
      if (halvings > 20 && decrement / 2.0 <= 1e-3) break;
    }
    if (nu / t < options_.gap_tol) break;
    t *= options_.t_growth;
  }

  res.status = SolveStatus::Optimal;
  res.objective = p.objective(x);
  res.gap_bound = nu / t;
  return res;
}

}  // namespace ssaam::optim
