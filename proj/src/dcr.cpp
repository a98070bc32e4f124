#include "cooprec/dcr.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>

#include "cooprec/errors.hpp"

namespace cooprec {

double InnerSolverConfig::tolerance_at(int outer_iteration) const {
  const double t = initial_tolerance * std::pow(tolerance_decay, std::max(outer_iteration - 1, 0));
  return std::max(tolerance_floor, t);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One party's ADMM step: min -log(<m, x> - base) + sign <Z, x> + q/2 ||x - other||^2.
SubproblemResult solve_local(const LinearUtility& utility, const RowFeasibleSet& rows, const Matrix& other,
                             const Matrix& z, double sign, double q, const Matrix& start,
                             const DescentOptions& options) {
  require(q > 0.0, "ADMM penalty must be positive");
  require(utility.gain(start) > 0.0, "local step must start inside the barrier");
  const auto n = start.size();
  const Eigen::Map<const Vector> m(utility.margin.data(), n);
  const Eigen::Map<const Vector> o(other.data(), n);
  const Eigen::Map<const Vector> d(z.data(), n);
  const double base = utility.baseline;

  DescentProblem dp;
  dp.value = [&](const Vector& x) {
    const double g = m.dot(x) - base;
    if (!(g > 0.0)) return kInf;
    return -std::log(g) + sign * d.dot(x) + 0.5 * q * (x - o).squaredNorm();
  };
  dp.gradient = [&](const Vector& x, Vector& grad) {
    const double g = m.dot(x) - base;
    grad = -m / g + sign * d + q * (x - o);
  };
  dp.project = [&](Vector& x) { rows.project(std::span<double>(x.data(), static_cast<std::size_t>(x.size()))); };

  Vector x0 = Eigen::Map<const Vector>(start.data(), n);
  auto r = projected_gradient_descent(dp, std::move(x0), options);
  SubproblemResult out;
  out.solution = Eigen::Map<const Matrix>(r.x.data(), start.rows(), start.cols());
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.projected_gradient_norm = r.projected_gradient_norm;
  return out;
}

double local_value(const LinearUtility& utility, const Matrix& x, const Matrix& other, const Matrix& z, double sign,
                   double q) {
  const double g = utility.gain(x);
  if (!(g > 0.0)) throw BarrierViolation("local ADMM objective needs a positive gain");
  return -std::log(g) + sign * z.cwiseProduct(x).sum() + 0.5 * q * (x - other).squaredNorm();
}

Matrix local_gradient(const LinearUtility& utility, const Matrix& x, const Matrix& other, const Matrix& z, double sign,
                      double q) {
  const double g = utility.gain(x);
  if (!(g > 0.0)) throw BarrierViolation("local ADMM gradient needs a positive gain");
  return -utility.margin / g + sign * z + q * (x - other);
}

}  // namespace

double cp_subproblem_objective(const LinearUtility& cp, const Matrix& psi, const Matrix& psi_tilde, const Matrix& z,
                               double q) {
  return local_value(cp, psi, psi_tilde, z, 1.0, q);
}

Matrix cp_subproblem_gradient(const LinearUtility& cp, const Matrix& psi, const Matrix& psi_tilde, const Matrix& z,
                              double q) {
  return local_gradient(cp, psi, psi_tilde, z, 1.0, q);
}

double cdn_subproblem_objective(const LinearUtility& cdn, const Matrix& psi_tilde, const Matrix& psi, const Matrix& z,
                                double q) {
  return local_value(cdn, psi_tilde, psi, z, -1.0, q);
}

Matrix cdn_subproblem_gradient(const LinearUtility& cdn, const Matrix& psi_tilde, const Matrix& psi, const Matrix& z,
                               double q) {
  return local_gradient(cdn, psi_tilde, psi, z, -1.0, q);
}

SubproblemResult cp_subproblem(const LinearUtility& cp, const RowFeasibleSet& rows, const Matrix& psi_tilde,
                               const Matrix& z, double q, const Matrix& start, const DescentOptions& options) {
  return solve_local(cp, rows, psi_tilde, z, 1.0, q, start, options);
}

SubproblemResult cdn_subproblem(const LinearUtility& cdn, const RowFeasibleSet& rows, const Matrix& psi,
                                const Matrix& z, double q, const Matrix& start, const DescentOptions& options) {
  return solve_local(cdn, rows, psi, z, -1.0, q, start, options);
}

DcrResult solve_dcr(const BargainingProblem& problem, const RowFeasibleSet& cp_rows, const RowFeasibleSet& cdn_rows,
                    const DcrConfig& config) {
  require(config.penalty_q > 0.0, "ADMM penalty must be positive");
  require(config.max_outer_iterations > 0, "ADMM needs at least one outer iteration");

  DcrResult result;
  // Feasibility phase, run by the mediator before any local step.
  const auto interior = find_interior_point(problem, cp_rows, config.feasibility);
  if (!interior.agreement) {
    result.outcome = disagreement_outcome(problem);
    return result;
  }

  // The two parties. Each holds only its own utility.
  const LinearUtility& cp = problem.cp;
  const LinearUtility& cdn = problem.cdn;
  const double q = config.penalty_q;

  Matrix psi = interior.y;
  Matrix psi_tilde = interior.y;
  Matrix z = Matrix::Zero(psi.rows(), psi.cols());
  bool converged = false;
  bool inner_ok = true;
  int iterations = 0;

  for (int k = 1; k <= config.max_outer_iterations; ++k) {
    DescentOptions options;
    options.max_iterations = config.inner.max_iterations;
    options.tolerance = config.inner.tolerance_at(k);
    options.step_rule = config.inner.step_rule;

    const Matrix& cp_start = config.warm_start ? psi : interior.y;
    auto cp_step = cp_subproblem(cp, cp_rows, psi_tilde, z, q, cp_start, options);
    // The CDN answers to the CP's fresh proposal.
    const Matrix& cdn_start = config.warm_start ? psi_tilde : interior.y;
    auto cdn_step = cdn_subproblem(cdn, cdn_rows, cp_step.solution, z, q, cdn_start, options);

    const Matrix previous_tilde = std::move(psi_tilde);
    psi = std::move(cp_step.solution);
    psi_tilde = std::move(cdn_step.solution);
    z += q * (psi - psi_tilde);

    AdmmRecord rec;
    rec.iteration = k;
    rec.primal_residual = (psi - psi_tilde).norm();
    rec.dual_residual = q * (psi_tilde - previous_tilde).norm();
    rec.cp_gain = cp.gain(psi);
    rec.cdn_gain = cdn.gain(psi_tilde);
    rec.objective = -std::log(rec.cp_gain) - std::log(rec.cdn_gain);
    rec.inner_converged = cp_step.converged && cdn_step.converged;
    inner_ok = inner_ok && rec.inner_converged;
    result.trace.records.push_back(rec);
    if (config.record_iterates) {
      result.trace.psi.push_back(psi);
      result.trace.psi_tilde.push_back(psi_tilde);
      result.trace.duals.push_back(z);
    }
    if (config.on_iteration) config.on_iteration(rec);
    iterations = k;
    if (rec.primal_residual < config.primal_tolerance && rec.dual_residual < config.dual_tolerance) {
      converged = true;
      break;
    }
  }
  result.final_primal_residual = (psi - psi_tilde).norm();

  // Consensus point; fall back to a local copy or the interior start if the
  // average does not strictly improve both parties.
  Matrix consensus = 0.5 * (psi + psi_tilde);
  cp_rows.project(consensus);
  const Matrix* chosen = nullptr;
  for (const Matrix* candidate : std::initializer_list<const Matrix*>{&consensus, &psi_tilde, &psi, &interior.y}) {
    if (cp.gain(*candidate) > 0.0 && cdn.gain(*candidate) > 0.0 && cp_rows.max_violation(*candidate) <= 1e-8) {
      chosen = candidate;
      break;
    }
  }
  if (chosen != &consensus) converged = false;
  if (chosen == nullptr) chosen = &interior.y;

  auto& out = result.outcome;
  out.status = BargainStatus::agreement;
  out.y_star = *chosen;
  out.cp_baseline = cp.baseline;
  out.cdn_baseline = cdn.baseline;
  out.cp_utility = cp.value(out.y_star);
  out.cdn_utility = cdn.value(out.y_star);
  out.cp_gain = out.cp_utility - cp.baseline;
  out.cdn_gain = out.cdn_utility - cdn.baseline;
  out.objective = -std::log(out.cp_gain) - std::log(out.cdn_gain);
  out.iterations = iterations;
  out.converged = converged && inner_ok;
  out.projected_gradient_norm = result.final_primal_residual;
  return result;
}

DcrResult solve_dcr(const Scenario& scenario, const DcrConfig& config) {
  const auto problem = make_bargaining_problem(scenario);
  CcrConfig rows_config;
  rows_config.qor_thresholds = config.qor_thresholds;
  const auto cp_rows = make_row_set(scenario, rows_config);
  const auto cdn_rows = make_row_set(scenario, CcrConfig{});
  return solve_dcr(problem, cp_rows, cdn_rows, config);
}

}  // namespace cooprec
