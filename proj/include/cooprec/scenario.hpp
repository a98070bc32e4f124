#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cooprec/model.hpp"

namespace cooprec {

// ---------------------------------------------------------------------------
// Ratings ingestion

struct RatingScale {
  double min = 0.5;
  double max = 5.0;
};

struct RelevanceLoad {
  Matrix relevance;
  std::vector<long long> user_ids;     ///< row u <- user_ids[u]
  std::vector<long long> content_ids;  ///< column i <- content_ids[i]
  std::size_t ratings_used = 0;
  std::size_t duplicates = 0;          ///< later rows replaced earlier ones
  std::size_t imputed_by_user = 0;
  std::size_t imputed_globally = 0;
};

/// Reads `user_id,content_id,rating` rows (optional header line, extra
/// trailing columns ignored). Keeps the `expected_users` smallest user ids
/// and `expected_contents` smallest content ids, maps ratings affinely to
/// [0, 1] and fills holes with the user's mean (global mean for users with
/// no rating). Throws InputError with the line number on malformed rows.
RelevanceLoad load_relevance_csv(const std::filesystem::path& path, std::size_t expected_users,
                                 std::size_t expected_contents, const RatingScale& scale = {});

// ---------------------------------------------------------------------------
// Generators

/// Knobs of the synthetic relevance model: r_ui = logistic(mean + b_u + c_i
/// + <P_u, Q_i>) with Gaussian factors.
struct SyntheticRelevance {
  int rank = 6;
  double mean = 1.0;
  double user_spread = 0.4;
  double item_spread = 1.0;
  double factor_spread = 0.5;
};

struct ScenarioOptions {
  std::size_t users = 100;
  std::size_t contents = 6000;
  int rec_count = 5;
  std::size_t caches = 9;
  std::size_t caches_per_user = 2;
  double edge_cost_min = 0.0005;
  double edge_cost_max = 0.02;
  double root_cost = 0.055;
  double lambda = 0.11;
  double rho = 0.3;
  RevenueMap revenue_map;
  double alpha_min = 0.6;
  double alpha_max = 1.0;
  /// Per-cache capacity as a fraction of the catalog, drawn uniformly.
  double capacity_fraction_min = 0.01;
  double capacity_fraction_max = 0.04;
  SyntheticRelevance synthetic;
  /// Loaded relevances; must be users x contents. Synthetic when empty.
  std::optional<Matrix> relevance;
};

/// Scenario I: several small caches, each user reaching a few of them.
Scenario generate_scenario_one(std::uint64_t seed, const ScenarioOptions& options = {});

/// Scenario II defaults: one small cache holding 5% of the catalog.
ScenarioOptions scenario_two_options();

/// Scenario II: one small cache reachable by every user.
Scenario generate_scenario_two(std::uint64_t seed, const ScenarioOptions& options = scenario_two_options());

/// The two-user, four-content example with one cache of capacity 2.
Scenario toy_scenario(double rho = 0.3);

/// Synthetic relevance matrix alone (deterministic in the seed).
Matrix synthetic_relevance(std::uint64_t seed, std::size_t users, std::size_t contents,
                           const SyntheticRelevance& knobs = {});

/// Per user the N_u largest R_ui; ties to the lower index.
Matrix baseline_recommendations(const Scenario& scenario);

/// Per cache, greedy fill by aggregate relevance of the connected users.
Matrix baseline_caching(const Scenario& scenario);

/// Popularity proportional to the column sums of the relevance matrix.
std::vector<double> relevance_popularity(const Matrix& relevance);

// ---------------------------------------------------------------------------
// Scenario files

inline constexpr int kScenarioSchemaVersion = 1;

std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

/// 64-bit FNV-1a of the canonical JSON, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string scenario_hash(const Scenario& scenario);

}  // namespace cooprec
