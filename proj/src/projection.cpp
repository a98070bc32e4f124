#include "cooprec/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cooprec/errors.hpp"

namespace cooprec {

namespace {

constexpr double kBisectionSumTolerance = 1e-10;
constexpr int kMaxBisectionSteps = 200;

// Exact shift for the active set identified at tau: coordinates clipped at 1
// contribute 1, free ones contribute v_i - tau'. Returns tau when the snapped
// value would change the active set.
double snap_shift(std::span<const double> v, double tau, double target) {
  double free_sum = 0.0;
  std::size_t free_count = 0;
  std::size_t saturated = 0;
  for (double x : v) {
    const double w = x - tau;
    if (w >= 1.0) {
      ++saturated;
    } else if (w > 0.0) {
      free_sum += x;
      ++free_count;
    }
  }
  if (free_count == 0) return tau;
  const double snapped = (free_sum + static_cast<double>(saturated) - target) / static_cast<double>(free_count);
  for (double x : v) {
    const double before = x - tau;
    const double after = x - snapped;
    const bool was_free = before > 0.0 && before < 1.0;
    const bool is_free = after > 0.0 && after < 1.0;
    if (was_free != is_free) return tau;
  }
  return snapped;
}

// Shift tau with sum clip(v - tau, 0, 1) = target. clipped_sum is
// nonincreasing in tau: it equals dimension at min(v) - 1 and 0 at max(v).
// The bracket [lo, hi] always shrinks monotonically; the trial point is the
// Newton step on the piecewise-linear sum when it falls strictly inside the
// bracket and the midpoint otherwise.
double capped_simplex_shift(std::span<const double> v, double target) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  lo -= 1.0;
  double tau = 0.5 * (lo + hi);
  for (int step = 0; step < kMaxBisectionSteps; ++step) {
    double s = 0.0;
    std::size_t free_count = 0;
    for (double x : v) {
      const double w = x - tau;
      if (w >= 1.0) {
        s += 1.0;
      } else if (w > 0.0) {
        s += w;
        ++free_count;
      }
    }
    if (std::abs(s - target) <= kBisectionSumTolerance) break;
    if (s > target) {
      lo = tau;
    } else {
      hi = tau;
    }
    double next = 0.5 * (lo + hi);
    if (free_count > 0) {
      const double newton = tau + (s - target) / static_cast<double>(free_count);
      if (newton > lo && newton < hi) next = newton;
    }
    if (next == tau) break;
    tau = next;
  }
  return snap_shift(v, tau, target);
}

void check_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw ContractViolation("projection input is not finite");
  }
}

}  // namespace

void project_capped_simplex_inplace(std::span<double> v, double target_sum) {
  const auto n = static_cast<double>(v.size());
  if (!(target_sum > 0.0) || target_sum > n) {
    throw ContractViolation("capped simplex target " + std::to_string(target_sum) + " infeasible for dimension " +
                            std::to_string(v.size()));
  }
  check_finite(v);
  if (target_sum == n) {
    std::fill(v.begin(), v.end(), 1.0);
    return;
  }
  const double tau = capped_simplex_shift(v, target_sum);
  for (double& x : v) x = std::clamp(x - tau, 0.0, 1.0);
}

std::vector<double> project_capped_simplex(std::span<const double> v, const CappedSimplexSpec& spec) {
  require(spec.dimension == v.size(), "capped simplex dimension does not match input length");
  std::vector<double> out(v.begin(), v.end());
  project_capped_simplex_inplace(out, spec.target_sum);
  return out;
}

void project_cache_capacity_inplace(std::span<double> v, double capacity) {
  require(capacity > 0.0, "cache capacity must be positive");
  check_finite(v);
  double s = 0.0;
  for (double x : v) s += std::clamp(x, 0.0, 1.0);
  if (s <= capacity) {
    for (double& x : v) x = std::clamp(x, 0.0, 1.0);
    return;
  }
  // Capacity active: the solution is clip(v - tau) with tau >= 0, i.e. the
  // equality-sum projection of the original (unclipped) point.
  project_capped_simplex_inplace(v, capacity);
}

std::vector<double> project_cache_capacity(std::span<const double> v, double capacity) {
  std::vector<double> out(v.begin(), v.end());
  project_cache_capacity_inplace(out, capacity);
  return out;
}

RowFeasibleSet::RowFeasibleSet(std::vector<double> row_targets, std::size_t cols)
    : targets_(std::move(row_targets)), cols_(cols) {
  for (double t : targets_) {
    require(t > 0.0 && t <= static_cast<double>(cols_), "row target must lie in (0, |K|]");
  }
}

void RowFeasibleSet::add_quality_floor(const Matrix& relevance, std::vector<double> thresholds) {
  require(static_cast<std::size_t>(relevance.rows()) == rows() && static_cast<std::size_t>(relevance.cols()) == cols_,
          "relevance shape does not match the feasible set");
  require(thresholds.size() == rows(), "one QoR threshold per user is required");
  qor_weights_.resize(relevance.rows(), relevance.cols());
  for (std::size_t u = 0; u < rows(); ++u) {
    const double t = thresholds[u];
    require(t > 0.0 && t <= 1.0, "QoR threshold must lie in (0, 1]");
    std::vector<double> row(relevance.row(u).begin(), relevance.row(u).end());
    const auto n = static_cast<std::size_t>(std::llround(targets_[u]));
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(n), row.end(), std::greater<>());
    double best = 0.0;
    for (std::size_t k = 0; k < n; ++k) best += row[k];
    require(best / targets_[u] >= t, "QoR threshold unreachable for user " + std::to_string(u));
    qor_weights_.row(u) = relevance.row(u) / targets_[u];
  }
  qor_thresholds_ = std::move(thresholds);
}

void RowFeasibleSet::project_row(std::span<double> row, std::size_t u) const {
  if (qor_thresholds_.empty()) {
    project_capped_simplex_inplace(row, targets_[u]);
    return;
  }
  // KKT: the projection is P(v + mu w) for the smallest mu >= 0 meeting
  // the floor, and w.P(v + mu w) is nondecreasing in mu.
  const auto n = row.size();
  const double* w = qor_weights_.row(u).data();
  const double target = targets_[u];
  const double floor = qor_thresholds_[u];
  const std::vector<double> v(row.begin(), row.end());
  std::vector<double> trial(n);
  auto quality_at = [&](double mu) {
    for (std::size_t i = 0; i < n; ++i) trial[i] = v[i] + mu * w[i];
    project_capped_simplex_inplace(trial, target);
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += w[i] * trial[i];
    return dot;
  };
  const double at_zero = quality_at(0.0);
  if (at_zero >= floor) {
    std::copy(trial.begin(), trial.end(), row.begin());
    return;
  }
  // Slope of the current linear piece: on the free set F,
  // d/dmu w.P = sum_F w^2 - (sum_F w)^2 / |F|.
  auto slope = [&]() {
    double s1 = 0.0, s2 = 0.0;
    std::size_t free = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (trial[i] > 0.0 && trial[i] < 1.0) {
        s1 += w[i];
        s2 += w[i] * w[i];
        ++free;
      }
    }
    return free == 0 ? 0.0 : s2 - s1 * s1 / static_cast<double>(free);
  };
  const double tol = 1e-13 * std::max(1.0, std::abs(floor));
  double lo = 0.0;
  double lo_gap = floor - at_zero;
  double lo_slope = slope();
  double w_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) w_max = std::max(w_max, w[i]);
  double hi = 1.0 / std::max(w_max, 1e-300);
  for (int k = 0; k < 200; ++k) {
    const double at_hi = quality_at(hi);
    if (at_hi >= floor) break;
    lo = hi;
    lo_gap = floor - at_hi;
    lo_slope = slope();
    hi *= 2.0;
  }
  quality_at(hi);
  std::vector<double> best = trial;
  // Newton from the infeasible end is exact within a piece; bisect if it
  // leaves the bracket.
  for (int k = 0; k < multiplier_iterations && hi - lo > 1e-15 * hi; ++k) {
    double mid = lo_slope > 0.0 ? lo + lo_gap / lo_slope : 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    const double gap = floor - quality_at(mid);
    if (gap <= tol) {
      hi = mid;
      best = trial;
      if (gap >= -tol) break;
    } else {
      lo = mid;
      lo_gap = gap;
      lo_slope = slope();
    }
  }
  std::copy(best.begin(), best.end(), row.begin());
}

void RowFeasibleSet::project(Matrix& y) const {
  require(static_cast<std::size_t>(y.rows()) == rows() && static_cast<std::size_t>(y.cols()) == cols_,
          "matrix shape does not match the feasible set");
  for (std::size_t u = 0; u < rows(); ++u) {
    project_row(std::span<double>(y.row(u).data(), cols_), u);
  }
}

void RowFeasibleSet::project(std::span<double> flat) const {
  require(flat.size() == rows() * cols_, "buffer size does not match the feasible set");
  for (std::size_t u = 0; u < rows(); ++u) project_row(flat.subspan(u * cols_, cols_), u);
}

double RowFeasibleSet::max_violation(const Matrix& y) const {
  double worst = 0.0;
  for (std::size_t u = 0; u < rows(); ++u) {
    worst = std::max(worst, std::abs(y.row(u).sum() - targets_[u]));
    worst = std::max(worst, -y.row(u).minCoeff());
    worst = std::max(worst, y.row(u).maxCoeff() - 1.0);
    if (!qor_thresholds_.empty()) {
      worst = std::max(worst, qor_thresholds_[u] - qor_weights_.row(u).dot(y.row(u)));
    }
  }
  return worst;
}

double RowFeasibleSet::min_quality_slack(const Matrix& y) const {
  double slack = std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < qor_thresholds_.size(); ++u) {
    slack = std::min(slack, qor_weights_.row(u).dot(y.row(u)) - qor_thresholds_[u]);
  }
  return slack;
}

InteriorPoint find_interior_point(const BargainingProblem& problem, const RowFeasibleSet& rows,
                                  const InteriorPointOptions& options) {
  require(rows.rows() == problem.rows() && rows.cols() == problem.cols(), "feasible set does not match problem");
  const double threshold =
      options.margin_scale * std::max({std::abs(problem.cp.baseline), std::abs(problem.cdn.baseline), 1.0});
  const double cp_scale = problem.cp.margin.cwiseAbs().maxCoeff();
  const double cdn_scale = problem.cdn.margin.cwiseAbs().maxCoeff();

  Matrix y = problem.baseline_y;
  rows.project(y);
  Matrix best = y;
  double best_margin = std::min(problem.cp.gain(y), problem.cdn.gain(y));
  int best_iteration = 0;
  Matrix direction(y.rows(), y.cols());

  for (int t = 1; t <= options.iterations; ++t) {
    const double g_cp = problem.cp.gain(y);
    const double g_cdn = problem.cdn.gain(y);
    const double tie = 1e-12 * std::max({std::abs(g_cp), std::abs(g_cdn), 1e-300});
    if (std::abs(g_cp - g_cdn) <= tie) {
      direction.setZero();
      if (cp_scale > 0.0) direction += problem.cp.margin / cp_scale;
      if (cdn_scale > 0.0) direction += problem.cdn.margin / cdn_scale;
    } else if (g_cp < g_cdn) {
      direction = problem.cp.margin;
    } else {
      direction = problem.cdn.margin;
    }
    const double norm = direction.cwiseAbs().maxCoeff();
    if (!(norm > 0.0)) break;
    y += direction * (1.0 / (std::sqrt(static_cast<double>(t)) * norm));
    rows.project(y);
    const double m = std::min(problem.cp.gain(y), problem.cdn.gain(y));
    if (m > best_margin) {
      best_margin = m;
      best = y;
      best_iteration = t;
    }
  }

  InteriorPoint out;
  if (best_margin > threshold) {
    out.agreement = true;
    out.y = best;
  } else {
    out.agreement = false;
    out.y = problem.baseline_y;
  }
  out.margin = best_margin;
  out.cp_slack = problem.cp.gain(out.y);
  out.cdn_slack = problem.cdn.gain(out.y);
  out.row_violation = rows.max_violation(out.y);
  out.quality_slack = rows.min_quality_slack(out.y);
  out.best_iteration = best_iteration;
  return out;
}

InteriorPoint find_interior_point(const Scenario& scenario, const RowFeasibleSet& rows,
                                  const InteriorPointOptions& options) {
  return find_interior_point(make_bargaining_problem(scenario), rows, options);
}

}  // namespace cooprec
