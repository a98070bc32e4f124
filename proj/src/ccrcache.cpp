#include "cooprec/ccrcache.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "cooprec/errors.hpp"

namespace cooprec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxAlternations = 100;

// G(X, Y, Z) = <b, Y> + <d, Z> + c0 + <e, X>, with
//   b_ui = (alpha_u/N_u)(Lambda_ui - k_u0)
//   d_ui = (alpha_u/N_u)(k_u0 - k_u1)            >= 0
//   e_i  = p_i sum_u (1 - alpha_u)(k_u0 - k_u1)  >= 0
//   c0   = sum_{u,i} (1 - alpha_u) p_i (lambda - k_u0)
struct CacheModel {
  LinearUtility cp;
  Matrix b;
  Matrix d;
  Vector e;
  double c0 = 0.0;
  double v_baseline = 0.0;
  Vector x_b;
  double capacity = 0.0;

  double g(const Vector& x, const Matrix& y, const Matrix& z) const {
    return b.cwiseProduct(y).sum() + d.cwiseProduct(z).sum() + c0 + e.dot(x);
  }
  // V(X, Y) through the same coefficients with z = x*y.
  double v(const Vector& x, const Matrix& y) const {
    return b.cwiseProduct(y).sum() + (d.cwiseProduct(y) * x).sum() + c0 + e.dot(x);
  }
};

CacheModel build_model(const Scenario& s) {
  const auto costs = single_cache_costs(s);
  const auto users = static_cast<Eigen::Index>(s.user_count());
  const auto contents = static_cast<Eigen::Index>(s.content_count());
  CacheModel m;
  m.cp = cp_objective(s);
  m.b.resize(users, contents);
  m.d.resize(users, contents);
  m.e = Vector::Zero(contents);
  double stray_saving = 0.0;
  for (Eigen::Index u = 0; u < users; ++u) {
    const auto uu = static_cast<std::size_t>(u);
    const double w = s.users.alpha[uu] / static_cast<double>(s.users.rec_count[uu]);
    const double k0 = costs.root[uu];
    const double saving = k0 - costs.edge[uu];
    const double stray = 1.0 - s.users.alpha[uu];
    stray_saving += stray * saving;
    for (Eigen::Index i = 0; i < contents; ++i) {
      m.b(u, i) = w * (discounted_price(s.pricing, s.baseline.y_b(u, i)) - k0);
      m.d(u, i) = w * saving;
      m.c0 += stray * s.catalog.popularity[static_cast<std::size_t>(i)] * (s.pricing.lambda - k0);
    }
  }
  for (Eigen::Index i = 0; i < contents; ++i) m.e[i] = s.catalog.popularity[static_cast<std::size_t>(i)] * stray_saving;
  m.x_b = baseline_cache_vector(s);
  m.capacity = s.topology.capacities[0];
  m.v_baseline = m.v(m.x_b, s.baseline.y_b);
  return m;
}

void project_cache(Vector& x, double capacity) {
  if (capacity <= 0.0) {
    x.setZero();
    return;
  }
  project_cache_capacity_inplace(std::span<double>(x.data(), static_cast<std::size_t>(x.size())), capacity);
}

Matrix scale_columns(const Matrix& y, const Vector& x) { return y * x.asDiagonal(); }

double max_coupling(const Matrix& z, const Matrix& y, const Vector& x) {
  return (z - scale_columns(y, x)).cwiseAbs().maxCoeff();
}

// Fixed-caching instance: V(x, Y) - V^b = <b + d diag(x), Y> - (V^b - c0 - <e, x>).
BargainingProblem at_cache(const CacheModel& m, const BargainingProblem& base, const Vector& x) {
  BargainingProblem p = base;
  p.cdn.margin = m.b + scale_columns(m.d, x);
  p.cdn.baseline = m.v_baseline - m.c0 - m.e.dot(x);
  return p;
}

// V is linear in x for fixed Y: fill the capacity by marginal saving, ties
// to the lower index.
Vector best_cache(const CacheModel& m, const Matrix& y) {
  const Vector saving = m.d.cwiseProduct(y).colwise().sum().transpose() + m.e;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(saving.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index l, Eigen::Index r) { return saving[l] > saving[r]; });
  Vector x = Vector::Zero(saving.size());
  double left = m.capacity;
  for (Eigen::Index i : order) {
    if (left <= 0.0 || !(saving[i] > 0.0)) break;
    x[i] = std::min(1.0, left);
    left -= x[i];
  }
  return x;
}

struct Candidate {
  Vector x;
  Matrix y;
  double objective = kInf;
  int rounds = 0;
};

double coupled_objective(const CacheModel& m, const Vector& x, const Matrix& y) {
  const double g1 = m.cp.gain(y);
  const double g2 = m.v(x, y) - m.v_baseline;
  if (!(g1 > 0.0) || !(g2 > 0.0)) return kInf;
  return -std::log(g1) - std::log(g2);
}

// Alternating exact best responses from cache x. Each accepted round lowers
// the objective, so the loop is finite.
Candidate refine_from(const CacheModel& m, const BargainingProblem& base, const RowFeasibleSet& rows,
                      const CcrConfig& ccr, Vector x, const Matrix* y_hint, int max_rounds) {
  Candidate best;
  Matrix hint = y_hint ? *y_hint : Matrix();
  for (int round = 1; round <= max_rounds; ++round) {
    const auto p = at_cache(m, base, x);
    const Matrix* start = nullptr;
    if (hint.size() > 0 && p.cp.gain(hint) > 0.0 && p.cdn.gain(hint) > 0.0) start = &hint;
    const auto o = solve_bargaining(p, rows, ccr, start);
    if (!o.agreement()) break;
    const double obj = coupled_objective(m, x, o.y_star);
    if (!(obj < best.objective - 1e-12)) break;
    best.x = x;
    best.y = o.y_star;
    best.objective = obj;
    best.rounds = round;
    Vector next = best_cache(m, o.y_star);
    if (next == x) break;
    x = std::move(next);
    hint = o.y_star;
  }
  return best;
}

}  // namespace

double g_function(const Scenario& scenario, const CacheVector& x, const Matrix& y, const Matrix& z) {
  const auto m = build_model(scenario);
  require(x.size() == m.b.cols() && y.rows() == m.b.rows() && y.cols() == m.b.cols() && z.rows() == y.rows() &&
              z.cols() == y.cols(),
          "G arguments have mismatched dimensions");
  return m.g(x, y, z);
}

CcrCacheResult solve_ccrcache(const Scenario& scenario, const CcrCacheConfig& config) {
  require(config.penalty_q > 0.0 && config.coupling_tolerance > 0.0, "CCRCache tolerances must be positive");
  require(config.max_outer_iterations > 0, "CCRCache needs at least one outer iteration");
  const auto m = build_model(scenario);
  const auto problem = make_bargaining_problem(scenario);
  const auto rows = RowFeasibleSet::for_problem(problem);
  require(config.penalty_growth >= 1.0 && config.penalty_max >= config.penalty_q, "bad penalty schedule");
  double q = config.penalty_q;

  CcrCacheResult result;
  auto& out = result.outcome;
  out.bargain.cp_baseline = m.cp.baseline;
  out.bargain.cdn_baseline = m.v_baseline;

  // At X = X^b the CDN gain V - V^b equals U~ - U~^b, so the fixed-caching
  // feasibility phase gives a start strictly inside both barriers.
  const auto interior = find_interior_point(problem, rows, config.feasibility);
  if (!interior.agreement) {
    out.bargain = disagreement_outcome(problem);
    out.bargain.cdn_baseline = m.v_baseline;
    out.bargain.cdn_utility = m.v_baseline;
    out.x = m.x_b;
    return result;
  }

  const auto users = m.b.rows();
  const auto contents = m.b.cols();
  const auto block = users * contents;
  Vector x = m.x_b;
  Matrix y = interior.y;
  if (config.warm_start_from_ccr) {
    CcrConfig ccr;
    ccr.feasibility = config.feasibility;
    const auto start = solve_bargaining(problem, rows, ccr, &interior.y);
    if (start.agreement()) y = start.y_star;
  }
  const Matrix y_start = y;
  Matrix z = scale_columns(y, x);
  Matrix h = Matrix::Zero(users, contents);

  const Eigen::Map<const Vector> a_flat(m.cp.margin.data(), block);
  const Eigen::Map<const Vector> b_flat(m.b.data(), block);
  const Eigen::Map<const Vector> d_flat(m.d.data(), block);

  double best_objective = kInf;
  double best_coupling = kInf;
  double coupling_mark = kInf;
  Matrix best_y = y;
  Vector best_x = x;
  int since_progress = 0;
  bool converged = false;
  bool inner_ok = true;
  int iterations = 0;
  Matrix xy_prev = z;

  for (int k = 1; k <= config.max_outer_iterations; ++k) {
    DescentOptions options;
    options.max_iterations = config.inner.max_iterations;
    options.tolerance = config.inner.tolerance_at(k);
    options.step_rule = config.inner.step_rule;

    // (Y, Z)-block with X^k fixed. Variables stacked as [vec Y; vec Z].
    {
      const double g_const = m.c0 + m.e.dot(x) - m.v_baseline;
      const Eigen::Map<const Vector> h_flat(h.data(), block);
      // x_i repeated per user, matching the row-major layout of Y.
      Vector x_rep(block);
      for (Eigen::Index u = 0; u < users; ++u) x_rep.segment(u * contents, contents) = x;
      DescentProblem dp;
      dp.value = [&](const Vector& v) {
        const auto yv = v.head(block);
        const auto zv = v.tail(block);
        const double g1 = a_flat.dot(yv) - m.cp.baseline;
        const double g2 = b_flat.dot(yv) + d_flat.dot(zv) + g_const;
        if (!(g1 > 0.0) || !(g2 > 0.0)) return kInf;
        const Vector r = zv - x_rep.cwiseProduct(yv) + h_flat;
        return -std::log(g1) - std::log(g2) + 0.5 * q * r.squaredNorm();
      };
      dp.gradient = [&](const Vector& v, Vector& grad) {
        const auto yv = v.head(block);
        const auto zv = v.tail(block);
        const double g1 = a_flat.dot(yv) - m.cp.baseline;
        const double g2 = b_flat.dot(yv) + d_flat.dot(zv) + g_const;
        const Vector r = zv - x_rep.cwiseProduct(yv) + h_flat;
        grad.resize(v.size());
        grad.head(block) = -a_flat / g1 - b_flat / g2 - q * x_rep.cwiseProduct(r);
        grad.tail(block) = -d_flat / g2 + q * r;
      };
      dp.project = [&](Vector& v) {
        rows.project(std::span<double>(v.data(), static_cast<std::size_t>(block)));
        v.tail(block) = v.tail(block).cwiseMax(0.0).cwiseMin(1.0);
      };
      Vector v0(2 * block);
      v0.head(block) = Eigen::Map<const Vector>(y.data(), block);
      v0.tail(block) = Eigen::Map<const Vector>(z.data(), block);
      auto r = projected_gradient_descent(dp, std::move(v0), options);
      inner_ok = inner_ok && r.converged;
      y = Eigen::Map<const Matrix>(r.x.data(), users, contents);
      z = Eigen::Map<const Matrix>(r.x.data() + block, users, contents);
    }
    const double cdn_gain_stale = m.g(x, y, z) - m.v_baseline;

    // X-block with the fresh (Y, Z).
    if (!config.fix_caching) {
      const double g_const = m.b.cwiseProduct(y).sum() + m.d.cwiseProduct(z).sum() + m.c0 - m.v_baseline;
      const Matrix zh = z + h;
      // ||Z + H - Y diag(x)||^2 = sum_i (x_i^2 ||y_i||^2 - 2 x_i <y_i, zh_i>) + const
      const Vector yy = y.colwise().squaredNorm().transpose();
      const Vector yz = y.cwiseProduct(zh).colwise().sum().transpose();
      DescentProblem dp;
      dp.value = [&](const Vector& v) {
        const double g2 = m.e.dot(v) + g_const;
        if (!(g2 > 0.0)) return kInf;
        return -std::log(g2) + 0.5 * q * (v.cwiseProduct(v).dot(yy) - 2.0 * v.dot(yz));
      };
      dp.gradient = [&](const Vector& v, Vector& grad) {
        const double g2 = m.e.dot(v) + g_const;
        grad = -m.e / g2 + q * (v.cwiseProduct(yy) - yz);
      };
      dp.project = [&](Vector& v) { project_cache(v, m.capacity); };
      auto r = projected_gradient_descent(dp, x, options);
      inner_ok = inner_ok && r.converged;
      x = std::move(r.x);
    }

    const Matrix xy = scale_columns(y, x);
    h += z - xy;

    AdmmRecord rec;
    rec.iteration = k;
    rec.primal_residual = (z - xy).norm();
    rec.dual_residual = q * (xy - xy_prev).norm();
    rec.coupling_violation = (z - xy).cwiseAbs().maxCoeff();
    rec.cp_gain = m.cp.gain(y);
    rec.cdn_gain = m.g(x, y, z) - m.v_baseline;
    rec.cdn_gain_stale = cdn_gain_stale;
    rec.cdn_gain_exact = m.v(x, y) - m.v_baseline;
    rec.objective = -std::log(rec.cp_gain) - std::log(rec.cdn_gain);
    rec.inner_converged = inner_ok;
    result.trace.records.push_back(rec);
    if (config.on_iteration) config.on_iteration(rec);
    xy_prev = xy;
    iterations = k;
    const double q_next = std::min(config.penalty_max, q * config.penalty_growth);
    h *= q / q_next;
    q = q_next;

    bool progress = false;
    if (rec.objective < best_objective - config.stall_improvement) {
      best_objective = rec.objective;
      progress = true;
    }
    if (rec.coupling_violation < best_coupling) {
      best_coupling = rec.coupling_violation;
      best_y = y;
      best_x = x;
    }
    if (rec.coupling_violation < config.stall_coupling_ratio * coupling_mark) {
      coupling_mark = rec.coupling_violation;
      progress = true;
    }
    if (rec.coupling_violation < config.coupling_tolerance) {
      converged = true;
      break;
    }
    since_progress = progress ? 0 : since_progress + 1;
    if (since_progress >= config.stall_window) {
      out.stalled = true;
      y = best_y;
      x = best_x;
      break;
    }
  }

  if (!converged && !out.stalled) {
    // iteration cap with the coupling unmet: same treatment as a stall
    out.stalled = true;
    y = best_y;
    x = best_x;
  }
  out.coupling_violation = out.stalled ? best_coupling : max_coupling(z, y, x);

  if (config.refine && !config.fix_caching) {
    CcrConfig ccr;
    ccr.feasibility = config.feasibility;
    ccr.step_rule = config.inner.step_rule;
    double current = coupled_objective(m, x, y);
    std::vector<Candidate> candidates;
    candidates.push_back(refine_from(m, problem, rows, ccr, x, &y, config.max_refinement_rounds));
    // Caches serving blends of Y^b and the start policy.
    for (double t : {0.0, 0.25, 0.5, 0.75}) {
      const Matrix blend = (1.0 - t) * scenario.baseline.y_b + t * y_start;
      const Matrix* hint = t > 0.0 ? &y_start : nullptr;
      candidates.push_back(
          refine_from(m, problem, rows, ccr, best_cache(m, blend), hint, config.max_refinement_rounds));
    }
    for (const auto& c : candidates) {
      if (c.objective < current - 1e-12) {
        current = c.objective;
        x = c.x;
        y = c.y;
        out.refined = true;
        out.refinement_rounds = c.rounds;
      }
    }
  }

  // Report through the exact V; fall back to the start if the returned pair
  // does not strictly improve both parties.
  auto cp_gain = m.cp.gain(y);
  auto cdn_gain = m.v(x, y) - m.v_baseline;
  if (!(cp_gain > 0.0) || !(cdn_gain > 0.0)) {
    y = interior.y;
    x = m.x_b;
    converged = false;
    cp_gain = m.cp.gain(y);
    cdn_gain = m.v(x, y) - m.v_baseline;
  }
  out.x = x;
  auto& bo = out.bargain;
  bo.status = BargainStatus::agreement;
  bo.y_star = y;
  bo.cp_gain = cp_gain;
  bo.cdn_gain = cdn_gain;
  bo.cp_utility = m.cp.baseline + cp_gain;
  bo.cdn_utility = m.v_baseline + cdn_gain;
  bo.objective = -std::log(cp_gain) - std::log(cdn_gain);
  bo.iterations = iterations;
  bo.converged = converged && !out.stalled;
  bo.projected_gradient_norm = out.coupling_violation;
  return result;
}

ProfitMaxResult profit_max_baseline(const Scenario& scenario) {
  const auto costs = single_cache_costs(scenario);
  const auto& s = scenario;
  const auto users = static_cast<Eigen::Index>(s.user_count());
  const auto contents = static_cast<Eigen::Index>(s.content_count());
  const double capacity = s.topology.capacities[0];
  const double lambda = s.pricing.lambda;

  std::vector<double> w(s.user_count());
  double stray_saving = 0.0;
  for (std::size_t u = 0; u < s.user_count(); ++u) {
    w[u] = s.users.alpha[u] / static_cast<double>(s.users.rec_count[u]);
    stray_saving += (1.0 - s.users.alpha[u]) * (costs.root[u] - costs.edge[u]);
  }

  // Utilities with no discount: the CP pays lambda on every request.
  auto cp_value = [&](const Matrix& y) {
    double total = 0.0;
    for (Eigen::Index u = 0; u < users; ++u)
      for (Eigen::Index i = 0; i < contents; ++i)
        total += w[static_cast<std::size_t>(u)] * y(u, i) * (s.pricing.revenue(u, i) - lambda * s.catalog.sizes[static_cast<std::size_t>(i)]);
    return total;
  };
  auto cdn_value = [&](const Matrix& y, const Vector& x) {
    double total = 0.0;
    for (Eigen::Index u = 0; u < users; ++u) {
      const auto uu = static_cast<std::size_t>(u);
      const double k0 = costs.root[uu];
      const double dk = costs.edge[uu] - k0;
      for (Eigen::Index i = 0; i < contents; ++i) {
        const double k = k0 + x[i] * dk;
        total += w[uu] * y(u, i) * (lambda - k) +
                 (1.0 - s.users.alpha[uu]) * s.catalog.popularity[static_cast<std::size_t>(i)] * (lambda - k);
      }
    }
    return total;
  };

  std::vector<Eigen::Index> order(static_cast<std::size_t>(contents));
  auto best_y = [&](const Vector& x) {
    // per-user top N_u on (alpha/N)(R - K(X)); ties to the lower index
    Matrix y_next = Matrix::Zero(users, contents);
    for (Eigen::Index u = 0; u < users; ++u) {
      const auto uu = static_cast<std::size_t>(u);
      std::vector<double> margin(static_cast<std::size_t>(contents));
      for (Eigen::Index i = 0; i < contents; ++i) {
        const double k = costs.root[uu] + x[i] * (costs.edge[uu] - costs.root[uu]);
        margin[static_cast<std::size_t>(i)] = w[uu] * (s.pricing.revenue(u, i) - k);
      }
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index l, Eigen::Index r) {
        return margin[static_cast<std::size_t>(l)] > margin[static_cast<std::size_t>(r)];
      });
      for (int n = 0; n < s.users.rec_count[uu]; ++n) y_next(u, order[static_cast<std::size_t>(n)]) = 1.0;
    }
    return y_next;
  };
  auto best_x = [&](const Matrix& y) {
    // fill capacity greedily by the saving of caching each content
    Vector saving = Vector::Zero(contents);
    for (Eigen::Index i = 0; i < contents; ++i) {
      double total = s.catalog.popularity[static_cast<std::size_t>(i)] * stray_saving;
      for (Eigen::Index u = 0; u < users; ++u) {
        const auto uu = static_cast<std::size_t>(u);
        total += w[uu] * y(u, i) * (costs.root[uu] - costs.edge[uu]);
      }
      saving[i] = total;
    }
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index l, Eigen::Index r) { return saving[l] > saving[r]; });
    Vector x_next = Vector::Zero(contents);
    double left = capacity;
    for (Eigen::Index i : order) {
      if (left <= 0.0 || !(saving[i] > 0.0)) break;
      x_next[i] = std::min(1.0, left);
      left -= x_next[i];
    }
    return x_next;
  };

  // Both block orders from the baseline pair; the higher aggregate profit
  // wins (first order on ties).
  ProfitMaxResult out;
  bool have = false;
  for (const bool x_first : {false, true}) {
    Matrix y = s.baseline.y_b;
    Vector x = x_first ? best_x(y) : baseline_cache_vector(s);
    int alternations = 0;
    bool stationary = false;
    for (int step = 1; step <= kMaxAlternations; ++step) {
      Matrix y_next = best_y(x);
      Vector x_next = best_x(y_next);
      alternations = step;
      const bool same = y_next == y && x_next == x;
      y = std::move(y_next);
      x = std::move(x_next);
      if (same) {
        stationary = true;
        break;
      }
    }
    const double profit = cp_value(y) + cdn_value(y, x);
    if (!have || profit > out.aggregate_profit) {
      have = true;
      out.y = y;
      out.x = x;
      out.aggregate_profit = profit;
      out.alternations = alternations;
      out.stationary = stationary;
    }
  }

  out.cp_utility = cp_value(out.y);
  out.cdn_utility = cdn_value(out.y, out.x);
  out.cp_baseline = cp_baseline_utility(s);
  out.cdn_baseline = cdn_baseline_utility_with_caching(s);
  return out;
}

}  // namespace cooprec
