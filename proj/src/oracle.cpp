#include "cooprec/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cooprec/errors.hpp"

namespace cooprec::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNoise = 1e-12;

struct Candidate {
  double cp = 0.0;
  double cdn = 0.0;
  std::vector<double> y;  // flattened rows chosen so far
};

// Keeps the Pareto-maximal candidates (exact comparisons, duplicates merged).
void prune(std::vector<Candidate>& c) {
  std::sort(c.begin(), c.end(), [](const Candidate& l, const Candidate& r) {
    return l.cp != r.cp ? l.cp > r.cp : l.cdn > r.cdn;
  });
  std::vector<Candidate> kept;
  double best_cdn = -kInf;
  for (auto& cand : c) {
    if (cand.cdn > best_cdn) {
      best_cdn = cand.cdn;
      kept.push_back(std::move(cand));
    }
  }
  c = std::move(kept);
}

// Gains within summation noise of the baseline do not count as improving.
double objective(double cp, double cdn, double cp_base, double cdn_base) {
  const double g1 = cp - cp_base;
  const double g2 = cdn - cdn_base;
  if (!(g1 > kNoise * std::max(1.0, std::abs(cp_base))) || !(g2 > kNoise * std::max(1.0, std::abs(cdn_base))))
    return kInf;
  return -std::log(g1) - std::log(g2);
}

// Pareto frontier of one row's (cp, cdn) contributions over grid points
// with sum of units in [lo, hi].
std::vector<Candidate> row_frontier(const double* a, const double* b, std::size_t k, int levels, int lo, int hi,
                                    double step, std::size_t& evaluated) {
  // states[s]: frontier of partial rows whose units sum to s.
  std::vector<std::vector<Candidate>> states(static_cast<std::size_t>(hi) + 1);
  states[0].push_back(Candidate{});
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<std::vector<Candidate>> next(states.size());
    for (int s = 0; s <= hi; ++s) {
      for (const auto& cand : states[static_cast<std::size_t>(s)]) {
        for (int l = 0; l <= levels && s + l <= hi; ++l) {
          const double v = l * step;
          Candidate c = cand;
          c.cp += a[i] * v;
          c.cdn += b[i] * v;
          c.y.push_back(v);
          next[static_cast<std::size_t>(s + l)].push_back(std::move(c));
          ++evaluated;
        }
      }
    }
    for (auto& n : next) prune(n);
    states = std::move(next);
  }
  std::vector<Candidate> out;
  for (int s = lo; s <= hi; ++s)
    for (auto& c : states[static_cast<std::size_t>(s)]) out.push_back(std::move(c));
  prune(out);
  return out;
}

std::vector<Candidate> minkowski(const std::vector<Candidate>& acc, const std::vector<Candidate>& row) {
  std::vector<Candidate> out;
  out.reserve(acc.size() * row.size());
  for (const auto& l : acc) {
    for (const auto& r : row) {
      Candidate c;
      c.cp = l.cp + r.cp;
      c.cdn = l.cdn + r.cdn;
      c.y = l.y;
      c.y.insert(c.y.end(), r.y.begin(), r.y.end());
      out.push_back(std::move(c));
    }
  }
  prune(out);
  return out;
}

void combinations(std::size_t k, int n, std::size_t start, std::vector<double>& cur, int left,
                  std::vector<std::vector<double>>& out) {
  if (left == 0) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = start; i < k; ++i) {
    cur[i] = 1.0;
    combinations(k, n, i + 1, cur, left - 1, out);
    cur[i] = 0.0;
  }
}

// Visits every x on the grid with sum x <= capacity.
void cache_grid(std::size_t k, int levels, double step, double capacity,
                const std::function<void(const Vector&)>& visit) {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(k));
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double used) {
    if (i == k) {
      visit(x);
      return;
    }
    for (int l = 0; l <= levels; ++l) {
      const double v = l * step;
      if (used + v > capacity + 1e-9) break;
      x[static_cast<Eigen::Index>(i)] = v;
      rec(i + 1, used + v);
    }
    x[static_cast<Eigen::Index>(i)] = 0.0;
  };
  rec(0, 0.0);
}

void require_small(const Scenario& s) {
  require(s.user_count() * s.content_count() <= kMaxVariables,
          "oracle refuses instances with more than 12 recommendation variables");
}

int grid_levels(double step) {
  require(step > 0.0 && step <= 1.0, "grid step must lie in (0, 1]");
  const double levels = 1.0 / step;
  require(std::abs(levels - std::round(levels)) < 1e-9, "grid step must divide 1");
  return static_cast<int>(std::lround(levels));
}

Matrix to_matrix(const std::vector<double>& flat, std::size_t users, std::size_t contents) {
  Matrix y(static_cast<Eigen::Index>(users), static_cast<Eigen::Index>(contents));
  for (std::size_t k = 0; k < flat.size(); ++k) y.data()[k] = flat[k];
  return y;
}

}  // namespace

std::vector<Matrix> discrete_policies(const std::vector<int>& rec_count, std::size_t contents) {
  std::vector<std::vector<std::vector<double>>> per_row;
  for (int n : rec_count) {
    require(n >= 0 && static_cast<std::size_t>(n) <= contents, "N_u outside [0, |K|]");
    std::vector<std::vector<double>> rows;
    std::vector<double> cur(contents, 0.0);
    combinations(contents, n, 0, cur, n, rows);
    per_row.push_back(std::move(rows));
  }
  std::vector<Matrix> out;
  std::vector<std::size_t> pick(per_row.size(), 0);
  while (true) {
    Matrix y(static_cast<Eigen::Index>(per_row.size()), static_cast<Eigen::Index>(contents));
    for (std::size_t u = 0; u < per_row.size(); ++u)
      for (std::size_t i = 0; i < contents; ++i)
        y(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)) = per_row[u][pick[u]][i];
    out.push_back(std::move(y));
    std::size_t u = 0;
    while (u < pick.size() && ++pick[u] == per_row[u].size()) pick[u++] = 0;
    if (u == pick.size()) break;
  }
  return out;
}

NashEnumeration enumerate_nash(const Scenario& scenario, double grid_step) {
  require_small(scenario);
  const int levels = grid_levels(grid_step);
  const auto users = scenario.user_count();
  const auto contents = scenario.content_count();
  const auto cp = cp_objective(scenario);
  const auto cdn = cdn_objective(scenario);

  NashEnumeration out;
  std::vector<Candidate> acc{Candidate{}};
  for (std::size_t u = 0; u < users; ++u) {
    const double target = scenario.users.rec_count[u] / grid_step;
    const int lo = static_cast<int>(std::ceil(target - 0.5 - 1e-9));
    const int hi = static_cast<int>(std::floor(target + 0.5 + 1e-9));
    auto row = row_frontier(cp.margin.row(static_cast<Eigen::Index>(u)).data(),
                            cdn.margin.row(static_cast<Eigen::Index>(u)).data(), contents, levels, std::max(lo, 0),
                            hi, grid_step, out.points_evaluated);
    acc = minkowski(acc, row);
  }
  // Discrete policies join the frontier.
  for (auto& y : discrete_policies(scenario.users.rec_count, contents)) {
    Candidate c;
    c.cp = cp.value(y);
    c.cdn = cdn.value(y);
    c.y.assign(y.data(), y.data() + y.size());
    acc.push_back(std::move(c));
    ++out.points_evaluated;
  }
  prune(acc);

  double best = kInf;
  const Candidate* best_c = &acc.front();
  for (const auto& c : acc) {
    out.frontier.emplace_back(c.cp, c.cdn);
    const double f = objective(c.cp, c.cdn, cp.baseline, cdn.baseline);
    if (f < best) {
      best = f;
      best_c = &c;
    }
  }
  out.any_improving = std::isfinite(best);
  out.best.y = to_matrix(best_c->y, users, contents);
  out.best.cp_utility = best_c->cp;
  out.best.cdn_utility = best_c->cdn;
  out.best.objective = best;
  return out;
}

bool is_non_dominated(const NashEnumeration& enumeration, double cp_utility, double cdn_utility, double tolerance) {
  for (const auto& [cp, cdn] : enumeration.frontier) {
    if (cp >= cp_utility && cdn >= cdn_utility && (cp > cp_utility + tolerance || cdn > cdn_utility + tolerance))
      return false;
  }
  return true;
}

Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f, const Matrix& point, double h) {
  require(h > 0.0, "finite-difference step must be positive");
  Matrix g(point.rows(), point.cols());
  Matrix probe = point;
  for (Eigen::Index k = 0; k < point.size(); ++k) {
    const double x = point.data()[k];
    probe.data()[k] = x + h;
    const double up = f(probe);
    probe.data()[k] = x - h;
    const double down = f(probe);
    probe.data()[k] = x;
    g.data()[k] = (up - down) / (2.0 * h);
  }
  return g;
}

CacheEnumeration enumerate_ccrcache(const Scenario& scenario, double x_step) {
  require_small(scenario);
  require_single_cache(scenario);
  const int levels = grid_levels(x_step);
  const double capacity = scenario.topology.capacities[0];
  const double cp_base = cp_baseline_utility(scenario);
  const double v_base = cdn_baseline_utility_with_caching(scenario);
  CacheEnumeration out;
  out.objective = kInf;
  for (const auto& y : discrete_policies(scenario.users.rec_count, scenario.content_count())) {
    const double cp = cp_utility(scenario, y);
    if (!(cp > cp_base)) continue;
    cache_grid(scenario.content_count(), levels, x_step, capacity, [&](const Vector& x) {
      const double f = objective(cp, cdn_utility_with_caching(scenario, y, x), cp_base, v_base);
      if (f < out.objective) {
        out.objective = f;
        out.y = y;
        out.x = x;
      }
    });
  }
  out.any_improving = std::isfinite(out.objective);
  return out;
}

ProfitEnumeration enumerate_profit_max(const Scenario& scenario, double x_step) {
  require_small(scenario);
  require_single_cache(scenario);
  const int levels = grid_levels(x_step);
  Scenario flat = scenario;
  flat.pricing.rho = 0.0;  // no discount: every request pays lambda
  const double capacity = scenario.topology.capacities[0];
  ProfitEnumeration out;
  out.aggregate_profit = -kInf;
  for (const auto& y : discrete_policies(scenario.users.rec_count, scenario.content_count())) {
    const double cp = cp_utility(flat, y);
    cache_grid(scenario.content_count(), levels, x_step, capacity, [&](const Vector& x) {
      const double total = cp + cdn_utility_with_caching(flat, y, x);
      if (total > out.aggregate_profit) {
        out.aggregate_profit = total;
        out.y = y;
        out.x = x;
      }
    });
  }
  return out;
}

}  // namespace cooprec::oracle
