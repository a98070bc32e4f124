#pragma once

#include <functional>

#include "cooprec/model.hpp"

namespace cooprec {

/// Backtracking knobs. The first trial step of a run is `initial_step`;
/// later trials start from the Barzilai-Borwein estimate of the last move.
struct StepRule {
  double initial_step = 1.0;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
};

struct DescentOptions {
  int max_iterations = 5000;
  double tolerance = 1e-8;  ///< on ||x - P(x - grad f(x))||
  StepRule step_rule;
};

/// A smooth objective over a closed convex set given by its projection.
/// `value` returns +inf outside the objective's domain (barrier violated);
/// such trial points are rejected by the line search.
struct DescentProblem {
  std::function<double(const Vector&)> value;
  std::function<void(const Vector&, Vector&)> gradient;
  std::function<void(Vector&)> project;
};

struct DescentResult {
  Vector x;
  double value = 0.0;
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
  int barrier_rejections = 0;
};

/// Monotone projected gradient: Armijo backtracking along the projection arc
/// x(t) = P(x - t grad). Every accepted step satisfies
/// f(x_new) <= f(x) + c grad^T (x_new - x), so f never increases.
/// `on_accept(iteration, value)` is called after every accepted step.
DescentResult projected_gradient_descent(const DescentProblem& problem, Vector start, const DescentOptions& options,
                                         const std::function<void(int, double)>& on_accept = {});

}  // namespace cooprec
