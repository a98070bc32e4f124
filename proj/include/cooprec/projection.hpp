#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cooprec/model.hpp"

namespace cooprec {

/// {w : sum w = target_sum, 0 <= w <= 1} in `dimension` coordinates.
struct CappedSimplexSpec {
  double target_sum = 1.0;
  std::size_t dimension = 0;
};

/// Euclidean projection onto the capped simplex. The shift tau in
/// w_i = clip(v_i - tau, 0, 1) is found by bisection to a sum error of 1e-10,
/// then snapped to the exact value for the identified active set.
std::vector<double> project_capped_simplex(std::span<const double> v, const CappedSimplexSpec& spec);

/// In-place variant used on matrix rows.
void project_capped_simplex_inplace(std::span<double> v, double target_sum);

/// Projection onto {w : sum w <= capacity, 0 <= w <= 1}.
std::vector<double> project_cache_capacity(std::span<const double> v, double capacity);
void project_cache_capacity_inplace(std::span<double> v, double capacity);

/// Per-user feasible rows: the capped simplex, optionally intersected with
/// the quality-of-recommendation half-space sum_i r_ui y_ui / N_u >= T_u.
class RowFeasibleSet {
 public:
  RowFeasibleSet(std::vector<double> row_targets, std::size_t cols);

  static RowFeasibleSet for_problem(const BargainingProblem& problem) {
    return RowFeasibleSet(problem.row_targets, problem.cols());
  }

  /// Adds QoR rows. Throws ContractViolation when a threshold is outside
  /// (0, 1] or exceeds what the user's best N_u items can reach.
  void add_quality_floor(const Matrix& relevance, std::vector<double> thresholds);

  bool has_quality_floor() const { return !qor_thresholds_.empty(); }

  /// Projects every row in place. With QoR rows the projection is
  /// P(v + mu w) on the capped simplex with the multiplier mu >= 0 found by
  /// safeguarded Newton steps, ending on the feasible side; row sums are
  /// always exact.
  void project(Matrix& y) const;

  /// Same, on a row-major rows() x cols() buffer.
  void project(std::span<double> flat) const;

  /// Largest violation of any row-sum, box or QoR constraint (0 if inside).
  double max_violation(const Matrix& y) const;

  /// Smallest QoR slack over users (+inf without QoR rows).
  double min_quality_slack(const Matrix& y) const;

  std::size_t rows() const { return targets_.size(); }
  std::size_t cols() const { return cols_; }
  const std::vector<double>& targets() const { return targets_; }

  int multiplier_iterations = 100;

 private:
  void project_row(std::span<double> row, std::size_t u) const;

  std::vector<double> targets_;
  std::size_t cols_;
  Matrix qor_weights_;  // r_ui / N_u
  std::vector<double> qor_thresholds_;
};

struct InteriorPointOptions {
  int iterations = 500;
  /// Margin threshold is margin_scale * max(|U^b|, |U~^b|, 1).
  double margin_scale = 1e-7;
};

/// Result of the feasibility phase. `agreement == false` means no policy was
/// found that strictly improves both parties; `y` then holds Y^b.
struct InteriorPoint {
  bool agreement = false;
  Matrix y;
  double margin = 0.0;        ///< min(cp_gain, cdn_gain) at y
  double cp_slack = 0.0;      ///< U(y) - U^b
  double cdn_slack = 0.0;     ///< U~(y) - U~^b
  double row_violation = 0.0; ///< max constraint violation at y
  double quality_slack = 0.0; ///< smallest QoR slack (+inf without QoR)
  int best_iteration = 0;
};

/// Projected supergradient ascent on m(Y) = min(U - U^b, U~ - U~^b) from
/// Y^b with step 1/sqrt(t) along the max-norm normalised supergradient.
InteriorPoint find_interior_point(const BargainingProblem& problem, const RowFeasibleSet& rows,
                                  const InteriorPointOptions& options = {});

InteriorPoint find_interior_point(const Scenario& scenario, const RowFeasibleSet& rows,
                                  const InteriorPointOptions& options = {});

}  // namespace cooprec
