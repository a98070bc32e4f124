#pragma once

// Brute-force references for tests. Nothing here calls the solvers; only the
// utility evaluation of the model is shared.

#include <functional>
#include <vector>

#include "cooprec/model.hpp"

namespace cooprec::oracle {

inline constexpr std::size_t kMaxVariables = 12;

/// A grid or discrete point with its utility pair.
struct ScoredPoint {
  Matrix y;
  double cp_utility = 0.0;
  double cdn_utility = 0.0;
  double objective = 0.0;  ///< -log product of gains (+inf if a gain is within 1e-12 of zero)
};

struct NashEnumeration {
  ScoredPoint best;
  bool any_improving = false;  ///< some point strictly improves both parties
  /// Utility pairs of every non-dominated point found (grid and discrete).
  std::vector<std::pair<double, double>> frontier;
  std::size_t points_evaluated = 0;
};

/// Scans all row-feasible grid points (per-coordinate step `grid_step`,
/// rows within half a step of N_u) and all discrete policies. The scan is
/// exact: rows are combined by Minkowski sums of per-row Pareto frontiers.
/// Throws ContractViolation for more than 12 variables.
NashEnumeration enumerate_nash(const Scenario& scenario, double grid_step = 0.05);

/// True if no enumerated point beats (cp, cdn) in both coordinates, with at
/// least one by more than `tolerance`.
bool is_non_dominated(const NashEnumeration& enumeration, double cp_utility, double cdn_utility,
                      double tolerance = 1e-6);

/// Every 0/1 matrix with row sums N_u.
std::vector<Matrix> discrete_policies(const std::vector<int>& rec_count, std::size_t contents);

/// Central differences (f(x + h e) - f(x - h e)) / 2h.
Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f, const Matrix& point,
                                  double h = 1e-6);

struct CacheEnumeration {
  Matrix y;
  Vector x;
  double objective = 0.0;  ///< -log(U - U^b) - log(V - V^b)
  bool any_improving = false;
};

/// Discrete Y times X on a `x_step` grid with sum x <= capacity.
CacheEnumeration enumerate_ccrcache(const Scenario& scenario, double x_step = 0.1);

struct ProfitEnumeration {
  Matrix y;
  Vector x;
  double aggregate_profit = 0.0;
};

/// Max of U + V without discount over discrete Y times the X grid.
ProfitEnumeration enumerate_profit_max(const Scenario& scenario, double x_step = 0.1);

}  // namespace cooprec::oracle
