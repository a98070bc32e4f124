#pragma once

// Centralized cooperative recommendations: the Nash bargaining problem
//   min -log(U(Y) - U^b) - log(U~(Y) - U~^b)
// over the per-user capped simplices, solved by projected gradient from a
// strictly interior starting point.

#include <optional>
#include <span>
#include <vector>

#include "cooprec/descent.hpp"
#include "cooprec/model.hpp"
#include "cooprec/projection.hpp"

namespace cooprec {

struct CcrConfig {
  int max_iterations = 5000;
  double gradient_tolerance = 1e-8;
  StepRule step_rule;
  /// Per-user floors T_u on sum_i r_ui y_ui / N_u; empty means no QoR rows.
  std::optional<std::vector<double>> qor_thresholds;
  InteriorPointOptions feasibility;
};

enum class BargainStatus { agreement, disagreement };

const char* to_string(BargainStatus status);

struct BargainOutcome {
  BargainStatus status = BargainStatus::disagreement;
  Matrix y_star;
  double cp_gain = 0.0;
  double cdn_gain = 0.0;
  double cp_utility = 0.0;
  double cdn_utility = 0.0;
  double cp_baseline = 0.0;
  double cdn_baseline = 0.0;
  /// Minimised negative log Nash product (NaN on disagreement).
  double objective = 0.0;
  int iterations = 0;
  bool converged = true;
  double projected_gradient_norm = 0.0;

  bool agreement() const { return status == BargainStatus::agreement; }
};

/// -log(U - U^b) - log(U~ - U~^b). Throws BarrierViolation if a gain is <= 0.
double nash_objective(const BargainingProblem& problem, const Matrix& y);
double nash_objective(const Scenario& scenario, const Matrix& y);

/// Entry (u,i): -a_ui / (U - U^b) - b_ui / (U~ - U~^b).
Matrix nash_gradient(const BargainingProblem& problem, const Matrix& y);
Matrix nash_gradient(const Scenario& scenario, const Matrix& y);

/// The fallback outcome: Y^b, zero gains.
BargainOutcome disagreement_outcome(const BargainingProblem& problem);

/// Feasible rows for a scenario, including QoR rows when configured.
RowFeasibleSet make_row_set(const Scenario& scenario, const CcrConfig& config);

/// Solves a bargaining instance. Runs the feasibility phase unless `start`
/// is given (it must then be strictly interior).
BargainOutcome solve_bargaining(const BargainingProblem& problem, const RowFeasibleSet& rows, const CcrConfig& config,
                                const Matrix* start = nullptr);

BargainOutcome solve_ccr(const Scenario& scenario, const CcrConfig& config = {});

/// Deterministic discrete policy: per user, the N_u largest entries of y,
/// ties broken by lower content index.
Matrix round_to_discrete(const Matrix& y, std::span<const int> rec_count);

}  // namespace cooprec
