#pragma once

// Distributed cooperative recommendations: ADMM over the CP's and the CDN's
// local copies Psi, Psi~ with consistency Psi = Psi~. Each party's step sees
// only its own utility; the mediator sees local solutions and duals.

#include <optional>
#include <vector>

#include "cooprec/admm.hpp"
#include "cooprec/ccr.hpp"
#include "cooprec/projection.hpp"

namespace cooprec {

struct DcrConfig {
  static constexpr double kLowPenalty = 0.003;
  static constexpr double kHighPenalty = 0.01;

  double penalty_q = kLowPenalty;
  int max_outer_iterations = 100;
  double primal_tolerance = 1e-4;
  double dual_tolerance = 1e-4;
  InnerSolverConfig inner;
  bool warm_start = true;
  bool record_iterates = false;
  /// QoR floors, enforced inside the CP's step only.
  std::optional<std::vector<double>> qor_thresholds;
  InteriorPointOptions feasibility;
  IterationLog on_iteration;
};

struct SubproblemResult {
  Matrix solution;
  bool converged = false;
  int iterations = 0;
  double projected_gradient_norm = 0.0;
};

/// -log(U(Psi) - U^b) + <Z, Psi> + q/2 ||Psi - Psi~||^2.
double cp_subproblem_objective(const LinearUtility& cp, const Matrix& psi, const Matrix& psi_tilde, const Matrix& z,
                               double q);
Matrix cp_subproblem_gradient(const LinearUtility& cp, const Matrix& psi, const Matrix& psi_tilde, const Matrix& z,
                              double q);

/// -log(U~(Psi~) - U~^b) - <Z, Psi~> + q/2 ||Psi - Psi~||^2.
double cdn_subproblem_objective(const LinearUtility& cdn, const Matrix& psi_tilde, const Matrix& psi, const Matrix& z,
                                double q);
Matrix cdn_subproblem_gradient(const LinearUtility& cdn, const Matrix& psi_tilde, const Matrix& psi, const Matrix& z,
                               double q);

/// CP step. Its inputs carry the CP utility only: no retrieval costs and no
/// CDN utility. `start` must satisfy U(start) > U^b.
SubproblemResult cp_subproblem(const LinearUtility& cp, const RowFeasibleSet& rows, const Matrix& psi_tilde,
                               const Matrix& z, double q, const Matrix& start, const DescentOptions& options);

/// CDN step; mirror image with the sign-flipped dual term. No revenue data.
SubproblemResult cdn_subproblem(const LinearUtility& cdn, const RowFeasibleSet& rows, const Matrix& psi,
                                const Matrix& z, double q, const Matrix& start, const DescentOptions& options);

struct DcrResult {
  /// Reports the projected average (Psi + Psi~)/2 of the last iterate.
  BargainOutcome outcome;
  AdmmTrace trace;
  /// Consensus residual ||Psi - Psi~||_F at termination.
  double final_primal_residual = 0.0;
};

DcrResult solve_dcr(const BargainingProblem& problem, const RowFeasibleSet& cp_rows, const RowFeasibleSet& cdn_rows,
                    const DcrConfig& config);

DcrResult solve_dcr(const Scenario& scenario, const DcrConfig& config = {});

}  // namespace cooprec
