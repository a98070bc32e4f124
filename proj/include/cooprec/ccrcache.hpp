#pragma once

// Joint recommendations and caching with one small cache and unit sizes.
// The bilinear products x_i y_ui are replaced by auxiliary z_ui and the
// coupling z = x*y is enforced by a three-block ADMM heuristic.

#include "cooprec/admm.hpp"
#include "cooprec/ccr.hpp"

namespace cooprec {

struct CcrCacheConfig {
  double penalty_q = 0.01;
  /// Penalty continuation: q is multiplied by `penalty_growth` after every
  /// outer iteration up to `penalty_max`; the scaled dual H is rescaled so
  /// the multiplier q H is unchanged. Growth 1 keeps q fixed.
  double penalty_growth = 1.3;
  double penalty_max = 10.0;
  /// Start Y at the fixed-caching bargaining solution instead of the
  /// feasibility-phase point.
  bool warm_start_from_ccr = true;
  int max_outer_iterations = 200;
  double coupling_tolerance = 1e-4;  ///< on max |z_ui - x_i y_ui|
  /// Inexact (Y,Z) and X solves; looser than the DCR defaults because the
  /// stacked (Y,Z) block is badly conditioned at small q.
  InnerSolverConfig inner{.max_iterations = 300, .tolerance_floor = 1e-7, .step_rule = {}};
  /// Stall: this many outer iterations without an objective improvement
  /// above `stall_improvement` and without the coupling violation dropping
  /// below `stall_coupling_ratio` times its last recorded drop.
  int stall_window = 20;
  double stall_improvement = 1e-10;
  double stall_coupling_ratio = 0.99;
  /// Keeps X at X^b throughout; the run then reduces to fixed-caching CCR.
  bool fix_caching = false;
  /// After the ADMM loop, alternate exact block best responses (bargaining
  /// over Y at fixed X, then the best cache for that Y) from the ADMM iterate
  /// and from caches that best serve blends of Y^b and the start policy;
  /// the lowest objective wins.
  bool refine = true;
  int max_refinement_rounds = 20;
  InteriorPointOptions feasibility;
  IterationLog on_iteration;
};

struct CcrCacheOutcome {
  /// Gains, utilities and objective use the exact V(X, Y) and V^b.
  BargainOutcome bargain;
  CacheVector x;
  /// Of the ADMM iterate (the returned pair itself is exactly coupled).
  double coupling_violation = 0.0;
  /// Stalled, or the iteration cap was reached with the coupling unmet; the
  /// ADMM iterate is then the one with the smallest coupling violation.
  bool stalled = false;
  /// True when a refinement candidate replaced the ADMM iterate.
  bool refined = false;
  int refinement_rounds = 0;
};

struct CcrCacheResult {
  CcrCacheOutcome outcome;
  AdmmTrace trace;
};

/// G(X, Y, Z); equals V(X, Y) when z_ui = x_i y_ui.
double g_function(const Scenario& scenario, const CacheVector& x, const Matrix& y, const Matrix& z);

CcrCacheResult solve_ccrcache(const Scenario& scenario, const CcrCacheConfig& config = {});

/// Aggregate-profit policy max U(Y) + V(X, Y) without a discount.
struct ProfitMaxResult {
  Matrix y;
  CacheVector x;
  double aggregate_profit = 0.0;
  /// Utilities at (y, x) with no discount on the delivery fee, and the
  /// baselines they are compared against.
  double cp_utility = 0.0;
  double cdn_utility = 0.0;
  double cp_baseline = 0.0;
  double cdn_baseline = 0.0;
  int alternations = 0;
  bool stationary = false;
};

ProfitMaxResult profit_max_baseline(const Scenario& scenario);

}  // namespace cooprec
