#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "cooprec/descent.hpp"
#include "cooprec/model.hpp"

namespace cooprec {

/// One outer ADMM iteration as seen by the mediator.
struct AdmmRecord {
  int iteration = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  double cp_gain = 0.0;
  double cdn_gain = 0.0;
  /// Joint caching only: max |z_ui - x_i y_ui| and the CDN gain measured
  /// with the caching iterate used inside the (Y,Z)-step.
  double coupling_violation = std::numeric_limits<double>::quiet_NaN();
  double cdn_gain_stale = std::numeric_limits<double>::quiet_NaN();
  /// Joint caching only: CDN gain through the exact V at (X, Y).
  double cdn_gain_exact = std::numeric_limits<double>::quiet_NaN();
  bool inner_converged = true;
};

struct AdmmTrace {
  std::vector<AdmmRecord> records;
  /// Filled only when iterate recording is requested; index k holds the
  /// values after outer iteration k+1.
  std::vector<Matrix> psi;
  std::vector<Matrix> psi_tilde;
  std::vector<Matrix> duals;
};

using IterationLog = std::function<void(const AdmmRecord&)>;

/// Inexact inner solves: tolerance for outer iteration k is
/// max(floor, initial * decay^(k-1)).
struct InnerSolverConfig {
  int max_iterations = 3000;
  double initial_tolerance = 1e-6;
  double tolerance_decay = 0.5;
  double tolerance_floor = 1e-9;
  StepRule step_rule;

  double tolerance_at(int outer_iteration) const;
};

}  // namespace cooprec
