#include "cooprec/ccr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cooprec/errors.hpp"

namespace cooprec {

const char* to_string(BargainStatus status) {
  return status == BargainStatus::agreement ? "agreement" : "disagreement";
}

double nash_objective(const BargainingProblem& problem, const Matrix& y) {
  const double g_cp = problem.cp.gain(y);
  const double g_cdn = problem.cdn.gain(y);
  if (!(g_cp > 0.0) || !(g_cdn > 0.0)) throw BarrierViolation("Nash objective needs strictly positive gains");
  return -std::log(g_cp) - std::log(g_cdn);
}

double nash_objective(const Scenario& scenario, const Matrix& y) {
  return nash_objective(make_bargaining_problem(scenario), y);
}

Matrix nash_gradient(const BargainingProblem& problem, const Matrix& y) {
  const double g_cp = problem.cp.gain(y);
  const double g_cdn = problem.cdn.gain(y);
  if (!(g_cp > 0.0) || !(g_cdn > 0.0)) throw BarrierViolation("Nash gradient needs strictly positive gains");
  return -problem.cp.margin / g_cp - problem.cdn.margin / g_cdn;
}

Matrix nash_gradient(const Scenario& scenario, const Matrix& y) {
  return nash_gradient(make_bargaining_problem(scenario), y);
}

BargainOutcome disagreement_outcome(const BargainingProblem& problem) {
  BargainOutcome out;
  out.status = BargainStatus::disagreement;
  out.y_star = problem.baseline_y;
  out.cp_baseline = problem.cp.baseline;
  out.cdn_baseline = problem.cdn.baseline;
  out.cp_utility = problem.cp.baseline;
  out.cdn_utility = problem.cdn.baseline;
  out.objective = std::numeric_limits<double>::quiet_NaN();
  return out;
}

RowFeasibleSet make_row_set(const Scenario& scenario, const CcrConfig& config) {
  std::vector<double> targets;
  for (int n : scenario.users.rec_count) targets.push_back(static_cast<double>(n));
  RowFeasibleSet rows(std::move(targets), scenario.content_count());
  if (config.qor_thresholds) rows.add_quality_floor(scenario.users.relevance, *config.qor_thresholds);
  return rows;
}

BargainOutcome solve_bargaining(const BargainingProblem& problem, const RowFeasibleSet& rows, const CcrConfig& config,
                                const Matrix* start) {
  require(config.max_iterations > 0 && config.gradient_tolerance > 0.0, "CCR tolerances must be positive");
  Matrix y0;
  if (start != nullptr) {
    y0 = *start;
  } else {
    auto interior = find_interior_point(problem, rows, config.feasibility);
    if (!interior.agreement) return disagreement_outcome(problem);
    y0 = std::move(interior.y);
  }

  const auto n_rows = static_cast<Eigen::Index>(problem.rows());
  const auto n_cols = static_cast<Eigen::Index>(problem.cols());
  const Eigen::Map<const Vector> a(problem.cp.margin.data(), problem.cp.margin.size());
  const Eigen::Map<const Vector> b(problem.cdn.margin.data(), problem.cdn.margin.size());
  const double cp_base = problem.cp.baseline;
  const double cdn_base = problem.cdn.baseline;

  DescentProblem dp;
  dp.value = [&](const Vector& x) {
    const double g1 = a.dot(x) - cp_base;
    const double g2 = b.dot(x) - cdn_base;
    if (!(g1 > 0.0) || !(g2 > 0.0)) return std::numeric_limits<double>::infinity();
    return -std::log(g1) - std::log(g2);
  };
  dp.gradient = [&](const Vector& x, Vector& g) {
    const double g1 = a.dot(x) - cp_base;
    const double g2 = b.dot(x) - cdn_base;
    g = -a / g1 - b / g2;
  };
  dp.project = [&](Vector& x) { rows.project(std::span<double>(x.data(), static_cast<std::size_t>(x.size()))); };

  DescentOptions options;
  options.max_iterations = config.max_iterations;
  options.tolerance = config.gradient_tolerance;
  options.step_rule = config.step_rule;
  Vector x0 = Eigen::Map<const Vector>(y0.data(), y0.size());
  auto result = projected_gradient_descent(dp, std::move(x0), options);

  BargainOutcome out;
  out.y_star = Eigen::Map<const Matrix>(result.x.data(), n_rows, n_cols);
  out.cp_baseline = cp_base;
  out.cdn_baseline = cdn_base;
  out.cp_utility = problem.cp.value(out.y_star);
  out.cdn_utility = problem.cdn.value(out.y_star);
  out.cp_gain = out.cp_utility - cp_base;
  out.cdn_gain = out.cdn_utility - cdn_base;
  out.status = BargainStatus::agreement;
  out.objective = result.value;
  out.iterations = result.iterations;
  out.converged = result.converged;
  out.projected_gradient_norm = result.projected_gradient_norm;
  return out;
}

BargainOutcome solve_ccr(const Scenario& scenario, const CcrConfig& config) {
  const auto problem = make_bargaining_problem(scenario);
  const auto rows = make_row_set(scenario, config);
  return solve_bargaining(problem, rows, config);
}

Matrix round_to_discrete(const Matrix& y, std::span<const int> rec_count) {
  require(static_cast<std::size_t>(y.rows()) == rec_count.size(), "one N_u per row is required");
  Matrix out = Matrix::Zero(y.rows(), y.cols());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(y.cols()));
  for (Eigen::Index u = 0; u < y.rows(); ++u) {
    const auto n = static_cast<std::size_t>(rec_count[static_cast<std::size_t>(u)]);
    require(n <= order.size(), "N_u exceeds the catalog size");
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index l, Eigen::Index r) { return y(u, l) > y(u, r); });
    for (std::size_t k = 0; k < n; ++k) out(u, order[k]) = 1.0;
  }
  return out;
}

}  // namespace cooprec
