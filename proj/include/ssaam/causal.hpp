#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssaam/data.hpp"

namespace ssaam::causal {

/// Reduced-form VAR with intercept, fitted by least squares.
struct VarFit {
  int lag = 1;
  std::vector<Eigen::MatrixXd> coeff;      // M_1..M_lag, each d x d
  std::vector<Eigen::MatrixXd> std_error;  // same shapes as coeff
  Eigen::VectorXd intercept;
  Eigen::MatrixXd residuals;  // (T - lag) x d
};

/// `x` is T x d, one row per time step.
VarFit fit_var(const Eigen::MatrixXd& x, int lag);

struct IcaOptions {
  int max_iter = 1000;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  bool throw_on_nonconvergence = true;
};

struct IcaResult {
  Eigen::MatrixXd unmixing;  // W, d x d; sources = W * x
  std::vector<int> iterations;
  bool converged = true;
};

/// Deflationary FastICA with tanh contrast on symmetrically whitened data.
/// `x` is T x d.
IcaResult fast_ica(const Eigen::MatrixXd& x, const IcaOptions& options = {});

/// Exact minimum-cost assignment; returns col[i] for each row i.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

struct InstantaneousEffects {
  Eigen::MatrixXd b0;
  std::vector<int> order;  // order[k] = variable at causal position k
};

InstantaneousEffects estimate_b0(const Eigen::MatrixXd& unmixing);

struct CausalGraph {
  std::vector<std::string> variables;
  int lag = 1;
  double threshold = 0.0;
  std::vector<Eigen::MatrixXd> b;  // b[0] instantaneous, b[k] lag k; b[k](target, source)
  std::vector<int> order;
  std::vector<std::string> warnings;
};

CausalGraph var_lingam(const Eigen::MatrixXd& x, std::vector<std::string> variables, int lag,
                       double threshold, const IcaOptions& ica = {});
CausalGraph var_lingam(const data::AlignedPanel& panel, int lag, double threshold,
                       const IcaOptions& ica = {});

struct Edge {
  std::string source;
  int source_lag = 0;
  std::string target;
  double weight = 0.0;
};

struct LeadReport {
  std::vector<Edge> edges;  // every surviving edge of the graph
  bool leads = false;
};

/// leads iff |B_1[target, source]| >= threshold.
LeadReport leading_effect(const CausalGraph& graph, const std::string& source, const std::string& target);

std::string graph_to_json(const CausalGraph& graph);
/// Direction / value table of surviving edges, plus the `leads:` line.
std::string format_lead_report(const CausalGraph& graph, const LeadReport& report, const std::string& source,
                               const std::string& target);

}  // namespace ssaam::causal
