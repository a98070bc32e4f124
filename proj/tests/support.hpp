#pragma once

// Test-only instance builders and brute-force references that do not touch
// the library's solver code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "cooprec/model.hpp"
#include "cooprec/scenario.hpp"

namespace testing_support {

using cooprec::Matrix;
using cooprec::Scenario;
using cooprec::Vector;

struct TinyOptions {
  std::size_t users = 2;
  std::size_t contents = 3;
  int rec_count = 1;
  double capacity = 1.0;
  double lambda = 0.5;
  double root_cost = 0.4;
  double edge_lo = 0.1;
  double edge_hi = 0.3;
  double rho_lo = 0.1;
  double rho_hi = 0.4;
  double alpha_lo = 0.6;
  double alpha_hi = 1.0;
};

// Random single-cache instance in the price regime of the two-user example,
// where most draws admit a jointly improving policy.
inline Scenario tiny_scenario(std::uint64_t seed, const TinyOptions& o = {}) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(gen); };
  Scenario s;
  s.seed = seed;
  s.catalog.sizes.assign(o.contents, 1.0);
  s.users.relevance.resize(static_cast<Eigen::Index>(o.users), static_cast<Eigen::Index>(o.contents));
  for (Eigen::Index u = 0; u < s.users.relevance.rows(); ++u)
    for (Eigen::Index i = 0; i < s.users.relevance.cols(); ++i) s.users.relevance(u, i) = unit(gen);
  std::vector<double> pop(o.contents, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < o.contents; ++i) {
    pop[i] = s.users.relevance.col(static_cast<Eigen::Index>(i)).sum() + 1e-3;
    total += pop[i];
  }
  for (double& p : pop) p /= total;
  s.catalog.popularity = pop;
  for (std::size_t u = 0; u < o.users; ++u) {
    s.users.alpha.push_back(draw(o.alpha_lo, o.alpha_hi));
    s.users.rec_count.push_back(o.rec_count);
    s.topology.access.push_back({0});
    s.topology.edge_cost.push_back({draw(o.edge_lo, o.edge_hi)});
    s.topology.root_cost.push_back(o.root_cost);
  }
  s.topology.capacities = {o.capacity};
  s.pricing.lambda = o.lambda;
  s.pricing.rho = draw(o.rho_lo, o.rho_hi);
  s.pricing.revenue_map = cooprec::RevenueMap{cooprec::RevenueMap::Kind::affine, 0.5, 0.5};
  s.pricing.revenue = s.users.relevance.unaryExpr([&](double r) { return 0.5 + 0.5 * r; });
  s.baseline.y_b = cooprec::baseline_recommendations(s);
  s.baseline.x_b = cooprec::baseline_caching(s);
  cooprec::validate(s);
  return s;
}

// Term-by-term utilities, written from the definitions without the library.
inline double cp_utility_ref(const Scenario& s, const Matrix& y) {
  double total = 0.0;
  for (std::size_t u = 0; u < s.user_count(); ++u) {
    for (std::size_t i = 0; i < s.content_count(); ++i) {
      const auto uu = static_cast<Eigen::Index>(u), ii = static_cast<Eigen::Index>(i);
      const double price = s.pricing.lambda * (1.0 + s.pricing.rho * (s.baseline.y_b(uu, ii) - 1.0));
      total += s.users.alpha[u] / s.users.rec_count[u] * y(uu, ii) *
               (s.pricing.revenue(uu, ii) - price * s.catalog.sizes[i]);
    }
  }
  return total;
}

inline double cost_ref(const Scenario& s, std::size_t u, std::size_t i) {
  double best = s.topology.root_cost[u];
  for (std::size_t k = 0; k < s.topology.access[u].size(); ++k) {
    const auto j = static_cast<Eigen::Index>(s.topology.access[u][k]);
    if (s.baseline.x_b(static_cast<Eigen::Index>(i), j) > 0.5) best = std::min(best, s.topology.edge_cost[u][k]);
  }
  return best * s.catalog.sizes[i];
}

inline double cdn_utility_ref(const Scenario& s, const Matrix& y) {
  double total = 0.0;
  for (std::size_t u = 0; u < s.user_count(); ++u) {
    for (std::size_t i = 0; i < s.content_count(); ++i) {
      const auto uu = static_cast<Eigen::Index>(u), ii = static_cast<Eigen::Index>(i);
      const double price = s.pricing.lambda * (1.0 + s.pricing.rho * (s.baseline.y_b(uu, ii) - 1.0));
      total += s.users.alpha[u] / s.users.rec_count[u] * y(uu, ii) * (price * s.catalog.sizes[i] - cost_ref(s, u, i));
    }
  }
  return total;
}

// V(X, Y) for one cache and unit sizes, straight from the definition.
inline double v_ref(const Scenario& s, const Matrix& y, const Vector& x) {
  double total = 0.0;
  for (std::size_t u = 0; u < s.user_count(); ++u) {
    const double k0 = s.topology.root_cost[u];
    const double k1 = s.topology.access[u].empty() ? k0 : s.topology.edge_cost[u][0];
    for (std::size_t i = 0; i < s.content_count(); ++i) {
      const auto uu = static_cast<Eigen::Index>(u), ii = static_cast<Eigen::Index>(i);
      const double k = x[ii] * k1 + (1.0 - x[ii]) * k0;
      const double price = s.pricing.lambda * (1.0 + s.pricing.rho * (s.baseline.y_b(uu, ii) - 1.0));
      total += s.users.alpha[u] / s.users.rec_count[u] * y(uu, ii) * (price - k) +
               (1.0 - s.users.alpha[u]) * s.catalog.popularity[i] * (s.pricing.lambda - k);
    }
  }
  return total;
}

// Sort-based Euclidean projection onto {sum = t, 0 <= w <= 1}: scan all
// breakpoint pairs (exact, O(n^2)).
inline std::vector<double> project_capped_simplex_ref(const std::vector<double>& v, double t) {
  std::vector<double> bps;
  for (double x : v) {
    bps.push_back(x);
    bps.push_back(x - 1.0);
  }
  std::sort(bps.begin(), bps.end());
  auto sum_at = [&](double tau) {
    double s = 0.0;
    for (double x : v) s += std::clamp(x - tau, 0.0, 1.0);
    return s;
  };
  // s(tau) is piecewise linear and nonincreasing; find the segment holding t.
  for (std::size_t k = 0; k + 1 < bps.size(); ++k) {
    const double a = bps[k], b = bps[k + 1];
    const double sa = sum_at(a), sb = sum_at(b);
    if (sa >= t && sb <= t) {
      const double tau = sa == sb ? a : a + (sa - t) * (b - a) / (sa - sb);
      std::vector<double> out;
      for (double x : v) out.push_back(std::clamp(x - tau, 0.0, 1.0));
      return out;
    }
  }
  return std::vector<double>(v.size(), t / static_cast<double>(v.size()));
}

inline cooprec::ScenarioOptions small_options(std::size_t users, std::size_t contents) {
  cooprec::ScenarioOptions o;
  o.users = users;
  o.contents = contents;
  return o;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testing_support
