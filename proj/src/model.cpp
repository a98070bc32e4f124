#include "cooprec/model.hpp"

#include <cmath>
#include <string>

#include "cooprec/errors.hpp"

namespace cooprec {

namespace {

constexpr double kSumTolerance = 1e-9;

std::string at(const char* what, std::size_t index) {
  return std::string(what) + "[" + std::to_string(index) + "]";
}

bool is_binary(double v) { return v == 0.0 || v == 1.0; }

// Weight alpha_u / N_u of a single recommended item.
double click_weight(const Scenario& s, std::size_t u) {
  return s.users.alpha[u] / static_cast<double>(s.users.rec_count[u]);
}

}  // namespace

double RevenueMap::operator()(double relevance) const {
  switch (kind) {
    case Kind::affine:
      return intercept + slope * relevance;
    case Kind::sqrt:
      return intercept + slope * std::sqrt(std::max(relevance, 0.0));
  }
  return intercept;
}

std::string RevenueMap::name() const { return kind == Kind::affine ? "affine" : "sqrt"; }

void validate_dimensions(const Scenario& s) {
  const auto users = s.user_count();
  const auto contents = s.content_count();
  const auto caches = s.cache_count();
  require(users > 0, "scenario has no users");
  require(contents > 0, "scenario has no contents");
  require(s.catalog.popularity.size() == contents, "popularity length != |K|");
  require(s.users.rec_count.size() == users, "rec_count length != |U|");
  require(static_cast<std::size_t>(s.users.relevance.rows()) == users &&
              static_cast<std::size_t>(s.users.relevance.cols()) == contents,
          "relevance is not |U| x |K|");
  require(s.topology.access.size() == users, "access list count != |U|");
  require(s.topology.edge_cost.size() == users, "edge_cost row count != |U|");
  require(s.topology.root_cost.size() == users, "root_cost length != |U|");
  require(static_cast<std::size_t>(s.pricing.revenue.rows()) == users &&
              static_cast<std::size_t>(s.pricing.revenue.cols()) == contents,
          "revenue is not |U| x |K|");
  require(static_cast<std::size_t>(s.baseline.y_b.rows()) == users &&
              static_cast<std::size_t>(s.baseline.y_b.cols()) == contents,
          "y_b is not |U| x |K|");
  require(static_cast<std::size_t>(s.baseline.x_b.rows()) == contents &&
              static_cast<std::size_t>(s.baseline.x_b.cols()) == caches,
          "x_b is not |K| x C");
  for (std::size_t u = 0; u < users; ++u) {
    require(s.topology.access[u].size() == s.topology.edge_cost[u].size(),
            at("access/edge_cost length mismatch for user", u));
    for (int j : s.topology.access[u]) {
      require(j >= 0 && static_cast<std::size_t>(j) < caches, at("cache index out of range for user", u));
    }
  }
}

void validate(const Scenario& s) {
  validate_dimensions(s);
  const auto users = s.user_count();
  const auto contents = s.content_count();

  double popularity_sum = 0.0;
  for (std::size_t i = 0; i < contents; ++i) {
    require(s.catalog.sizes[i] > 0.0, at("size must be positive: sigma", i));
    require(s.catalog.popularity[i] >= 0.0, at("popularity must be nonnegative: p", i));
    popularity_sum += s.catalog.popularity[i];
  }
  require(std::abs(popularity_sum - 1.0) <= kSumTolerance, "popularity does not sum to 1");

  for (std::size_t u = 0; u < users; ++u) {
    const double a = s.users.alpha[u];
    require(a > 0.0 && a <= 1.0, at("alpha outside (0, 1]", u));
    const int n = s.users.rec_count[u];
    require(n >= 1 && static_cast<std::size_t>(n) <= contents, at("rec_count outside [1, |K|]", u));
    for (std::size_t i = 0; i < contents; ++i) {
      const double r = s.users.relevance(u, i);
      require(r >= 0.0 && r <= 1.0, at("relevance outside [0, 1] for user", u));
    }
  }

  for (std::size_t u = 0; u < users; ++u) {
    const auto& costs = s.topology.edge_cost[u];
    for (std::size_t k = 0; k < costs.size(); ++k) {
      require(costs[k] > 0.0, at("edge cost must be positive for user", u));
      require(costs[k] < s.topology.root_cost[u], at("edge cost must be below root cost for user", u));
      if (k > 0) require(costs[k - 1] <= costs[k], at("access order not sorted by cost for user", u));
    }
  }
  for (double c : s.topology.capacities) require(c >= 0.0, "negative cache capacity");

  require(s.pricing.lambda > 0.0, "lambda must be positive");
  require(s.pricing.rho > 0.0 && s.pricing.rho < 1.0, "rho must lie in (0, 1)");

  for (std::size_t u = 0; u < users; ++u) {
    double recommended = 0.0;
    for (std::size_t i = 0; i < contents; ++i) {
      const double y = s.baseline.y_b(u, i);
      require(is_binary(y), at("y_b not binary for user", u));
      recommended += y;
    }
    require(recommended == static_cast<double>(s.users.rec_count[u]), at("y_b row sum != N_u for user", u));
  }
  for (std::size_t j = 0; j < s.cache_count(); ++j) {
    double stored = 0.0;
    for (std::size_t i = 0; i < contents; ++i) {
      const double x = s.baseline.x_b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      require(is_binary(x), at("x_b not binary for cache", j));
      stored += x * s.catalog.sizes[i];
    }
    require(stored <= s.topology.capacities[j] + kSumTolerance, at("baseline caching exceeds capacity of cache", j));
  }
}

double retrieval_cost(const Scenario& s, std::size_t u, std::size_t i) {
  require(u < s.user_count(), "user index out of range");
  require(i < s.content_count(), "content index out of range");
  // Telescoping form: sum_j sigma k_(j) x_(j) prod_{l<j} (1 - x_(l)), with the
  // root ranked last and always holding the content.
  const auto& access = s.topology.access[u];
  const auto& costs = s.topology.edge_cost[u];
  double miss = 1.0;
  double cost = 0.0;
  for (std::size_t k = 0; k < access.size(); ++k) {
    const double x = s.baseline.x_b(static_cast<Eigen::Index>(i), access[k]);
    cost += costs[k] * x * miss;
    miss *= 1.0 - x;
  }
  cost += s.topology.root_cost[u] * miss;
  return s.catalog.sizes[i] * cost;
}

Matrix retrieval_costs(const Scenario& s) {
  validate_dimensions(s);
  Matrix k(s.user_count(), s.content_count());
  for (std::size_t u = 0; u < s.user_count(); ++u) {
    for (std::size_t i = 0; i < s.content_count(); ++i) k(u, i) = retrieval_cost(s, u, i);
  }
  return k;
}

double discounted_price(const PricingModel& pricing, double baseline_recommended) {
  return pricing.lambda * (1.0 + pricing.rho * (baseline_recommended - 1.0));
}

double LinearUtility::value(const Matrix& y) const {
  require(y.rows() == margin.rows() && y.cols() == margin.cols(), "recommendation matrix has wrong shape");
  return margin.cwiseProduct(y).sum();
}

LinearUtility cp_objective(const Scenario& s) {
  validate_dimensions(s);
  LinearUtility out;
  out.margin.resize(s.user_count(), s.content_count());
  double baseline = 0.0;
  for (std::size_t u = 0; u < s.user_count(); ++u) {
    const double w = click_weight(s, u);
    for (std::size_t i = 0; i < s.content_count(); ++i) {
      const double yb = s.baseline.y_b(u, i);
      const double sigma = s.catalog.sizes[i];
      const double revenue = s.pricing.revenue(u, i);
      out.margin(u, i) = w * (revenue - discounted_price(s.pricing, yb) * sigma);
      baseline += w * yb * (revenue - s.pricing.lambda * sigma);
    }
  }
  out.baseline = baseline;
  return out;
}

LinearUtility cdn_objective(const Scenario& s) {
  validate_dimensions(s);
  LinearUtility out;
  out.margin.resize(s.user_count(), s.content_count());
  double baseline = 0.0;
  for (std::size_t u = 0; u < s.user_count(); ++u) {
    const double w = click_weight(s, u);
    for (std::size_t i = 0; i < s.content_count(); ++i) {
      const double yb = s.baseline.y_b(u, i);
      const double sigma = s.catalog.sizes[i];
      const double k = retrieval_cost(s, u, i);
      out.margin(u, i) = w * (discounted_price(s.pricing, yb) * sigma - k);
      baseline += w * yb * (s.pricing.lambda * sigma - k);
    }
  }
  out.baseline = baseline;
  return out;
}

double cp_baseline_utility(const Scenario& s) { return cp_objective(s).baseline; }
double cdn_baseline_utility(const Scenario& s) { return cdn_objective(s).baseline; }
double cp_utility(const Scenario& s, const Matrix& y) { return cp_objective(s).value(y); }
double cdn_utility(const Scenario& s, const Matrix& y) { return cdn_objective(s).value(y); }

void require_single_cache(const Scenario& s) {
  validate_dimensions(s);
  require(s.cache_count() == 1, "single-cache evaluation needs exactly one small cache");
  for (std::size_t i = 0; i < s.content_count(); ++i) {
    require(std::abs(s.catalog.sizes[i] - 1.0) <= 1e-12, "single-cache evaluation needs unit content sizes");
  }
}

SingleCacheCosts single_cache_costs(const Scenario& s) {
  require_single_cache(s);
  SingleCacheCosts out;
  out.root = s.topology.root_cost;
  out.edge = s.topology.root_cost;
  for (std::size_t u = 0; u < s.user_count(); ++u) {
    if (!s.topology.access[u].empty()) out.edge[u] = s.topology.edge_cost[u].front();
  }
  return out;
}

Vector baseline_cache_vector(const Scenario& s) {
  require_single_cache(s);
  return s.baseline.x_b.col(0);
}

double cdn_baseline_utility_with_caching(const Scenario& s) {
  return cdn_utility_with_caching(s, s.baseline.y_b, baseline_cache_vector(s));
}

double cdn_utility_with_caching(const Scenario& s, const Matrix& y, const Vector& x) {
  const auto costs = single_cache_costs(s);
  require(static_cast<std::size_t>(x.size()) == s.content_count(), "cache vector has wrong length");
  require(static_cast<std::size_t>(y.rows()) == s.user_count() &&
              static_cast<std::size_t>(y.cols()) == s.content_count(),
          "recommendation matrix has wrong shape");
  const double lambda = s.pricing.lambda;
  double total = 0.0;
  for (std::size_t u = 0; u < s.user_count(); ++u) {
    const double w = click_weight(s, u);
    const double k0 = costs.root[u];
    const double dk = costs.edge[u] - k0;
    const double stray = 1.0 - s.users.alpha[u];
    for (std::size_t i = 0; i < s.content_count(); ++i) {
      const double k = k0 + x[i] * dk;
      const double price = discounted_price(s.pricing, s.baseline.y_b(u, i));
      total += w * y(u, i) * (price - k) + stray * s.catalog.popularity[i] * (lambda - k);
    }
  }
  return total;
}

BargainingProblem make_bargaining_problem(const Scenario& s) {
  BargainingProblem p;
  p.cp = cp_objective(s);
  p.cdn = cdn_objective(s);
  p.row_targets.reserve(s.user_count());
  for (int n : s.users.rec_count) p.row_targets.push_back(static_cast<double>(n));
  p.baseline_y = s.baseline.y_b;
  return p;
}

Scenario with_discount(const Scenario& s, double rho) {
  require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
  Scenario out = s;
  out.pricing.rho = rho;
  return out;
}

}  // namespace cooprec
