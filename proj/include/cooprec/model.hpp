#pragma once

// Domain types of the CP-CDN cooperation model and the closed-form utility,
// cost and pricing evaluations built on them. Everything here is a pure
// function of immutable inputs.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cooprec {

/// Dense row-major matrix; rows are users, columns are contents.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// |U| x |K| probabilistic recommendation variables in [0, 1].
using RecommendationMatrix = Matrix;
/// Length-|K| continuous caching variables (single small cache).
using CacheVector = Vector;

struct Catalog {
  std::vector<double> sizes;       ///< sigma_i in Gb
  std::vector<double> popularity;  ///< p_i, out-of-recommendation request law

  std::size_t content_count() const { return sizes.size(); }
};

struct UserPopulation {
  std::vector<double> alpha;  ///< probability of following recommendations
  std::vector<int> rec_count; ///< N_u
  Matrix relevance;           ///< r_ui in [0, 1]

  std::size_t user_count() const { return alpha.size(); }
};

/// Small caches plus the implicit root cache. `access[u]` lists the caches
/// user u reaches, ordered by nondecreasing `edge_cost[u]`; the root is always
/// reachable and is not listed.
struct CacheTopology {
  std::vector<double> capacities;               ///< Gb per small cache
  std::vector<std::vector<int>> access;         ///< per-user reachable caches
  std::vector<std::vector<double>> edge_cost;   ///< k_uj, parallel to access
  std::vector<double> root_cost;                ///< k_u0

  std::size_t cache_count() const { return capacities.size(); }
};

/// Nondecreasing relevance-to-revenue map phi used when generating R_ui.
struct RevenueMap {
  enum class Kind { affine, sqrt };
  Kind kind = Kind::affine;
  double intercept = 0.15;
  double slope = 0.09;

  double operator()(double relevance) const;
  std::string name() const;
};

struct PricingModel {
  double lambda = 0.11;  ///< currency per Gb requested
  double rho = 0.3;      ///< discount in (0, 1)
  Matrix revenue;        ///< R_ui
  RevenueMap revenue_map;
};

struct BaselinePolicy {
  Matrix y_b;  ///< binary |U| x |K|
  Matrix x_b;  ///< binary |K| x C
};

struct Scenario {
  Catalog catalog;
  UserPopulation users;
  CacheTopology topology;
  PricingModel pricing;
  BaselinePolicy baseline;
  std::uint64_t seed = 0;

  std::size_t user_count() const { return users.user_count(); }
  std::size_t content_count() const { return catalog.content_count(); }
  std::size_t cache_count() const { return topology.cache_count(); }
};

/// Checks every type invariant and cross-field dimension. Throws
/// ContractViolation naming the first broken one.
void validate(const Scenario& scenario);

/// Only the dimension agreement checks; used by evaluators that must also
/// accept invariant-bypassed test scenarios.
void validate_dimensions(const Scenario& scenario);

// ---------------------------------------------------------------------------
// Prices and costs

/// K_ui under the baseline caching: sigma_i times the cost of the cheapest
/// reachable cache holding i, or the root cost when none does.
double retrieval_cost(const Scenario& scenario, std::size_t user, std::size_t content);

/// All K_ui at once.
Matrix retrieval_costs(const Scenario& scenario);

/// Lambda_ui = lambda [1 + rho (y_b - 1)].
double discounted_price(const PricingModel& pricing, double baseline_recommended);

// ---------------------------------------------------------------------------
// Utilities (fixed caching)

/// Linear utility <margin, Y> together with its disagreement value.
struct LinearUtility {
  Matrix margin;
  double baseline = 0.0;

  double value(const Matrix& y) const;
  double gain(const Matrix& y) const { return value(y) - baseline; }
};

/// CP's coefficients (alpha_u/N_u)(R_ui - Lambda_ui sigma_i) and U^b. Reads
/// only CP-side data: alpha, N, R, Y^b, sigma, lambda, rho.
LinearUtility cp_objective(const Scenario& scenario);

/// CDN's coefficients (alpha_u/N_u)(Lambda_ui sigma_i - K_ui) and U~^b.
/// Reads no revenue data.
LinearUtility cdn_objective(const Scenario& scenario);

double cp_baseline_utility(const Scenario& scenario);
double cdn_baseline_utility(const Scenario& scenario);
double cp_utility(const Scenario& scenario, const Matrix& y);
double cdn_utility(const Scenario& scenario, const Matrix& y);

// ---------------------------------------------------------------------------
// Utilities with a single small cache and unit sizes

/// Per-user (k_u0, k_u1). Users that do not reach cache 0 get k_u1 = k_u0.
struct SingleCacheCosts {
  std::vector<double> root;
  std::vector<double> edge;
};

SingleCacheCosts single_cache_costs(const Scenario& scenario);

/// Throws unless the scenario has exactly one small cache and unit sizes.
void require_single_cache(const Scenario& scenario);

/// V^b: the CDN baseline including out-of-recommendation traffic.
double cdn_baseline_utility_with_caching(const Scenario& scenario);

/// V(X, Y).
double cdn_utility_with_caching(const Scenario& scenario, const Matrix& y, const Vector& x);

/// Column 0 of X^b as a CacheVector.
Vector baseline_cache_vector(const Scenario& scenario);

// ---------------------------------------------------------------------------

/// The fixed-caching bargaining instance seen by the solvers: two linear
/// utilities over the per-user capped simplices sum_i y_ui = N_u.
struct BargainingProblem {
  LinearUtility cp;
  LinearUtility cdn;
  std::vector<double> row_targets;
  Matrix baseline_y;

  std::size_t rows() const { return row_targets.size(); }
  std::size_t cols() const { return static_cast<std::size_t>(baseline_y.cols()); }
};

BargainingProblem make_bargaining_problem(const Scenario& scenario);

/// Returns a copy with a different discount; R, K and baselines unchanged.
Scenario with_discount(const Scenario& scenario, double rho);

}  // namespace cooprec
