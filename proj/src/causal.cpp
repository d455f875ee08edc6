#include "ssaam/causal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "ssaam/error.hpp"

namespace ssaam::causal {

VarFit fit_var(const Eigen::MatrixXd& x, int lag) {
  if (lag < 1) throw Error(ErrorCode::InvalidLag, fmt::format("lag must be >= 1, got {}", lag));
  const Eigen::Index T = x.rows();
  const Eigen::Index d = x.cols();
  if (d < 1 || T <= lag * d + d + 1)
    throw Error(ErrorCode::InsufficientSamples,
                fmt::format("{} samples cannot support a lag-{} VAR in {} variables", T, lag, d));
  if (!x.allFinite()) throw Error(ErrorCode::NonFiniteInput, "VAR input has non-finite entries");

  const Eigen::Index n = T - lag;
  const Eigen::Index k = 1 + lag * d;
  Eigen::MatrixXd design(n, k);
  design.col(0).setOnes();
  for (int l = 1; l <= lag; ++l) design.block(0, 1 + (l - 1) * d, n, d) = x.middleRows(lag - l, n);
  const Eigen::MatrixXd y = x.bottomRows(n);

  // Column scaling so the rank test is not fooled by units.
  Eigen::VectorXd scale = design.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < k; ++j)
    if (scale(j) == 0.0) throw Error(ErrorCode::SingularRegressors, "all-zero regressor column");
  const Eigen::MatrixXd scaled = design * scale.cwiseInverse().asDiagonal();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) throw Error(ErrorCode::SingularRegressors, "regressor matrix is rank deficient");

  const Eigen::MatrixXd beta = scale.cwiseInverse().asDiagonal() * qr.solve(y);
  Eigen::MatrixXd resid = y - design * beta;

  VarFit fit;
  fit.lag = lag;
  fit.intercept = beta.row(0).transpose();
  const Eigen::MatrixXd gram_inv = (scaled.transpose() * scaled).inverse();
  const double dof = static_cast<double>(n - k);
  for (int l = 1; l <= lag; ++l) {
    Eigen::MatrixXd m(d, d), se(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double sigma2 = dof > 0 ? resid.col(i).squaredNorm() / dof : 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const Eigen::Index row = 1 + (l - 1) * d + j;
        m(i, j) = beta(row, i);
        se(i, j) = std::sqrt(sigma2 * gram_inv(row, row)) / scale(row);
      }
    }
    fit.coeff.push_back(std::move(m));
    fit.std_error.push_back(std::move(se));
  }
  resid.rowwise() -= resid.colwise().mean();
  fit.residuals = std::move(resid);
  return fit;
}

IcaResult fast_ica(const Eigen::MatrixXd& x, const IcaOptions& options) {
  const Eigen::Index T = x.rows();
  const Eigen::Index d = x.cols();
  if (d < 2) throw Error(ErrorCode::InvalidArgument, "ICA needs at least two signals");
  if (T <= d) throw Error(ErrorCode::InsufficientSamples, "ICA needs more samples than signals");
  if (!x.allFinite()) throw Error(ErrorCode::NonFiniteInput, "ICA input has non-finite entries");

  Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = (xc.transpose() * xc) / static_cast<double>(T);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd ev = eig.eigenvalues();
  if (ev.minCoeff() <= 1e-12 * std::max(ev.maxCoeff(), 0.0))
    throw Error(ErrorCode::RankDeficient, "residual covariance is rank deficient");
  const Eigen::MatrixXd whitening =
      eig.eigenvectors() * ev.cwiseInverse().cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::MatrixXd z = xc * whitening;  // rows are whitened samples

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  IcaResult result;
  Eigen::MatrixXd w_white = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index p = 0; p < d; ++p) {
    Eigen::VectorXd w(d);
    for (Eigen::Index i = 0; i < d; ++i) w(i) = normal(rng);
    w.normalize();

    int it = 0;
    bool done = false;
    for (; it < options.max_iter && !done; ++it) {
      const Eigen::VectorXd proj = z * w;
      const Eigen::ArrayXd g = proj.array().tanh();
      const double gprime_mean = (1.0 - g.square()).mean();
      Eigen::VectorXd next = (z.transpose() * g.matrix()) / static_cast<double>(T) - gprime_mean * w;
      for (Eigen::Index q = 0; q < p; ++q) next -= next.dot(w_white.row(q).transpose()) * w_white.row(q).transpose();
      next.normalize();
      done = std::abs(std::abs(next.dot(w)) - 1.0) < options.tol;
      w = next;
    }
    if (!done) {
      if (options.throw_on_nonconvergence)
        throw Error(ErrorCode::NoConvergence, fmt::format("component {} after {} iterations", p, it));
      result.converged = false;
    }
    result.iterations.push_back(it);
    w_white.row(p) = w.transpose();
  }
  result.unmixing = w_white * whitening;
  return result;
}

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw Error(ErrorCode::InvalidArgument, "assignment cost must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col(n);
  for (int j = 1; j <= n; ++j) col[p[j] - 1] = j - 1;
  return col;
}

namespace {

double upper_mass(const Eigen::MatrixXd& b, const std::vector<int>& order) {
  double s = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = i + 1; j < order.size(); ++j) s += b(order[i], order[j]) * b(order[i], order[j]);
  return s;
}

std::vector<int> exhaustive_order(const Eigen::MatrixXd& b) {
  std::vector<int> perm(static_cast<std::size_t>(b.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_mass = upper_mass(b, perm);
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double m = upper_mass(b, perm);
    if (m < best_mass) {
      best_mass = m;
      best = perm;
    }
  }
  return best;
}

// Repeatedly take the remaining variable with the least incoming mass from
// the other remaining variables.
std::vector<int> greedy_order(const Eigen::MatrixXd& b) {
  const int d = static_cast<int>(b.rows());
  std::vector<int> remaining(d), order;
  std::iota(remaining.begin(), remaining.end(), 0);
  while (!remaining.empty()) {
    std::size_t pick = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < remaining.size(); ++a) {
      double incoming = 0.0;
      for (int other : remaining) incoming += b(remaining[a], other) * b(remaining[a], other);
      if (incoming < best) {
        best = incoming;
        pick = a;
      }
    }
    order.push_back(remaining[pick]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return order;
}

}  // namespace

InstantaneousEffects estimate_b0(const Eigen::MatrixXd& unmixing) {
  const Eigen::Index d = unmixing.rows();
  if (unmixing.cols() != d || d == 0) throw Error(ErrorCode::InvalidArgument, "unmixing matrix must be square");
  const double scale = unmixing.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw Error(ErrorCode::DegenerateUnmixing, "unmixing matrix is zero");

  Eigen::MatrixXd cost(d, d);
  double max_finite = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double a = std::abs(unmixing(i, j));
      cost(i, j) = a > 0.0 ? 1.0 / a : -1.0;
      max_finite = std::max(max_finite, cost(i, j));
    }
  // Zeros become a penalty larger than any all-finite assignment.
  const double big = (static_cast<double>(d) + 1.0) * max_finite + 1.0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      if (cost(i, j) < 0.0) cost(i, j) = big;

  const auto col = hungarian(cost);
  Eigen::MatrixXd permuted(d, d);
  for (Eigen::Index i = 0; i < d; ++i) permuted.row(col[static_cast<std::size_t>(i)]) = unmixing.row(i);
  for (Eigen::Index j = 0; j < d; ++j)
    if (std::abs(permuted(j, j)) <= 1e-12 * scale)
      throw Error(ErrorCode::DegenerateUnmixing, "zero diagonal under every row assignment");

  const Eigen::MatrixXd normalized = permuted.diagonal().cwiseInverse().asDiagonal() * permuted;
  Eigen::MatrixXd b0 = Eigen::MatrixXd::Identity(d, d) - normalized;
  b0.diagonal().setZero();

  InstantaneousEffects out;
  out.order = d <= 8 ? exhaustive_order(b0) : greedy_order(b0);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j)
      b0(out.order[static_cast<std::size_t>(i)], out.order[static_cast<std::size_t>(j)]) = 0.0;
  out.b0 = std::move(b0);
  return out;
}

CausalGraph var_lingam(const Eigen::MatrixXd& x, std::vector<std::string> variables, int lag, double threshold,
                       const IcaOptions& ica) {
  if (lag < 1) throw Error(ErrorCode::InvalidLag, fmt::format("lag must be >= 1, got {}", lag));
  if (!(threshold >= 0.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be nonnegative");
  if (static_cast<Eigen::Index>(variables.size()) != x.cols())
    throw Error(ErrorCode::InvalidArgument, "one name per variable required");

  const VarFit fit = fit_var(x, lag);
  const IcaResult ica_result = fast_ica(fit.residuals, ica);
  InstantaneousEffects inst = estimate_b0(ica_result.unmixing);

  CausalGraph g;
  g.variables = std::move(variables);
  g.lag = lag;
  g.threshold = threshold;
  g.order = inst.order;
  if (!ica_result.converged) g.warnings.emplace_back("FastICA did not converge; B0 is unreliable");

  const Eigen::MatrixXd ib0 = Eigen::MatrixXd::Identity(x.cols(), x.cols()) - inst.b0;
  g.b.push_back(std::move(inst.b0));
  for (const auto& m : fit.coeff) g.b.push_back(ib0 * m);
  for (auto& b : g.b) b = (b.array().abs() < threshold).select(0.0, b);
  return g;
}

CausalGraph var_lingam(const data::AlignedPanel& panel, int lag, double threshold, const IcaOptions& ica) {
  return var_lingam(panel.matrix(), {"index", "portfolio"}, lag, threshold, ica);
}

namespace {

int variable_index(const CausalGraph& g, const std::string& name) {
  const auto it = std::find(g.variables.begin(), g.variables.end(), name);
  if (it == g.variables.end()) throw Error(ErrorCode::UnknownVariable, name);
  return static_cast<int>(it - g.variables.begin());
}

std::string edge_label(const Edge& e) {
  const std::string src = e.source_lag == 0 ? e.source + "(t)" : fmt::format("{}(t-{})", e.source, e.source_lag);
  return fmt::format("{} -> {}(t)", src, e.target);
}

}  // namespace

LeadReport leading_effect(const CausalGraph& graph, const std::string& source, const std::string& target) {
  const int s = variable_index(graph, source);
  const int t = variable_index(graph, target);
  LeadReport report;
  for (std::size_t k = 0; k < graph.b.size(); ++k) {
    const auto& b = graph.b[k];
    for (Eigen::Index to = 0; to < b.rows(); ++to)
      for (Eigen::Index from = 0; from < b.cols(); ++from) {
        if (b(to, from) == 0.0) continue;
        report.edges.push_back({graph.variables[static_cast<std::size_t>(from)], static_cast<int>(k),
                                graph.variables[static_cast<std::size_t>(to)], b(to, from)});
      }
  }
  report.leads = graph.b.size() > 1 && graph.b[1](t, s) != 0.0 && std::abs(graph.b[1](t, s)) >= graph.threshold;
  return report;
}

std::string graph_to_json(const CausalGraph& graph) {
  nlohmann::ordered_json j;
  j["variables"] = graph.variables;
  j["lag"] = graph.lag;
  j["threshold"] = graph.threshold;
  j["order"] = graph.order;
  auto mats = nlohmann::ordered_json::array();
  for (const auto& b : graph.b) {
    auto rows = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      std::vector<double> row(b.row(i).begin(), b.row(i).end());
      rows.push_back(row);
    }
    mats.push_back(rows);
  }
  j["B"] = mats;
  j["warnings"] = graph.warnings;
  return j.dump(2) + "\n";
}

std::string format_lead_report(const CausalGraph& graph, const LeadReport& report, const std::string& source,
                               const std::string& target) {
  std::string out = fmt::format("{:<36} {}\n", "Direction", "Causal Graph Value");
  for (const auto& e : report.edges) out += fmt::format("{:<36} {:.4f}\n", edge_label(e), e.weight);
  out += fmt::format("threshold: {}\n", graph.threshold);
  out += fmt::format("{}(t-1) -> {}(t) leads: {}\n", source, target, report.leads ? "true" : "false");
  return out;
}

}  // namespace ssaam::causal
