#pragma once

#include <span>

namespace ssaam::optim {

// Sample risk measures of a loss vector (positive = loss), each at tail
// probability alpha.

/// The ceil(alpha*T)-th largest loss; the Rockafellar-Uryasev minimiser.
double value_at_risk(std::span<const double> losses, double alpha);

/// VaR + (1/(alpha*T)) * sum(max(loss - VaR, 0)).
double conditional_value_at_risk(std::span<const double> losses, double alpha);

struct EvarResult {
  double value = 0.0;
  double z = 0.0;  // argmin; 0 when the infimum is the z -> 0 limit (max loss)
};

/// min over z > 0 of z * ln((1/alpha) * mean(exp(loss / z))).
EvarResult evar_scalar(std::span<const double> losses, double alpha);

/// The objective above at a fixed z > 0, evaluated with log-sum-exp.
double evar_objective(std::span<const double> losses, double alpha, double z);

}  // namespace ssaam::optim
