#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <unistd.h>

#include "cooprec/errors.hpp"
#include "cooprec/scenario.hpp"
#include "support.hpp"

using namespace cooprec;
namespace fs = std::filesystem;

namespace {

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& name, const std::string& body)
      : path(fs::temp_directory_path() / ("cooprec_test_" + std::to_string(::getpid()) + "_" + name)) {
    std::ofstream(path) << body;
  }
  ~TempFile() { fs::remove(path); }
};

// One user who reaches the only cache; the relevance row sets the scores.
Scenario caching_case(const std::vector<double>& relevance, const std::vector<double>& sizes, double capacity) {
  auto s = testing_support::tiny_scenario(1, {.users = 1, .contents = relevance.size()});
  for (std::size_t i = 0; i < relevance.size(); ++i) s.users.relevance(0, static_cast<Eigen::Index>(i)) = relevance[i];
  s.catalog.sizes = sizes;
  s.topology.capacities = {capacity};
  return s;
}

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("ratings map to the unit interval") {
    const TempFile f("ends.csv", "user_id,content_id,rating\n1,10,5.0\n1,11,0.5\n2,10,2.75\n2,11,5\n");
    const auto r = load_relevance_csv(f.path, 2, 2);
    CHECK(r.relevance(0, 0) == 1.0);
    CHECK(r.relevance(0, 1) == 0.0);
    CHECK(r.relevance(1, 0) == doctest::Approx(0.5));
    CHECK(r.user_ids == std::vector<long long>{1, 2});
    CHECK(r.content_ids == std::vector<long long>{10, 11});
    CHECK(r.ratings_used == 4);
  }

  TEST_CASE("holes take the user's mean") {
    // user 2 misses content 3: mean of (4.0 -> 7/9) and (2.0 -> 1/3)
    const TempFile f("hole.csv",
                     "1,1,5.0\n1,2,4.0\n1,3,3.0\n2,1,4.0\n2,2,2.0\n3,1,1.0\n3,2,1.5\n3,3,2.0\n");
    const auto r = load_relevance_csv(f.path, 3, 3);
    CHECK(r.relevance(1, 2) == doctest::Approx((7.0 / 9.0 + 1.0 / 3.0) / 2.0).epsilon(1e-12));
    CHECK(r.imputed_by_user == 1);
    CHECK(r.imputed_globally == 0);
  }

  TEST_CASE("users without ratings take the global mean") {
    // user 5 is kept only because the file lists it with a rating for an
    // item outside the kept columns
    const TempFile f("global.csv", "1,1,5.0\n1,2,0.5\n2,1,5.0\n2,2,5.0\n5,9,3.0\n");
    const auto r = load_relevance_csv(f.path, 3, 2);
    CHECK(r.user_ids == std::vector<long long>{1, 2, 5});
    CHECK(r.relevance(2, 0) == doctest::Approx(0.75));
    CHECK(r.relevance(2, 1) == doctest::Approx(0.75));
    CHECK(r.imputed_globally == 2);
  }

  TEST_CASE("duplicates keep the last rating and extra columns are ignored") {
    const TempFile f("dup.csv", "1,1,1.0,964982703\n1,1,5.0,964982704\n1,2,0.5,964982705\n");
    const auto r = load_relevance_csv(f.path, 1, 2);
    CHECK(r.relevance(0, 0) == 1.0);
    CHECK(r.duplicates == 1);
  }

  TEST_CASE("malformed input") {
    const TempFile bad("bad.csv", "1,1,5.0\n1,x,4.0\n");
    try {
      load_relevance_csv(bad.path, 1, 1);
      FAIL("no exception");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
    const TempFile range("range.csv", "1,1,7.0\n");
    CHECK_THROWS_AS(load_relevance_csv(range.path, 1, 1), InputError);
    const TempFile few("few.csv", "1,1,5.0\n");
    CHECK_THROWS_AS(load_relevance_csv(few.path, 2, 1), InputError);
    CHECK_THROWS_AS(load_relevance_csv(fs::temp_directory_path() / "cooprec_missing.csv", 1, 1), InputError);
  }

  TEST_CASE("generated scenarios") {
    const auto opts = testing_support::small_options(100, 300);
    const auto a = generate_scenario_one(7, opts);
    SUBCASE("deterministic in the seed") {
      CHECK(scenario_to_json(a) == scenario_to_json(generate_scenario_one(7, opts)));
      CHECK(scenario_hash(a) != scenario_hash(generate_scenario_one(8, opts)));
    }
    SUBCASE("parameter ranges") {
      CHECK_NOTHROW(validate(a));
      double sum = 0.0;
      for (double x : a.users.alpha) {
        CHECK(x >= 0.6);
        CHECK(x < 1.0);
        sum += x;
      }
      const double mean = sum / 100.0;
      CHECK(mean >= 0.78);
      CHECK(mean <= 0.82);
      CHECK(a.pricing.revenue.minCoeff() >= 0.15 - 1e-12);
      CHECK(a.pricing.revenue.maxCoeff() <= 0.24 + 1e-12);
      CHECK(a.pricing.lambda == 0.11);
      CHECK(a.cache_count() == 9);
      for (std::size_t u = 0; u < 100; ++u) {
        CHECK(a.users.rec_count[u] == 5);
        CHECK(a.topology.access[u].size() == 2);
        CHECK(a.topology.root_cost[u] == 0.055);
        for (double k : a.topology.edge_cost[u]) {
          CHECK(k >= 0.0005);
          CHECK(k <= 0.02);
          CHECK(k < a.topology.root_cost[u]);
        }
      }
      for (double c : a.topology.capacities) {
        CHECK(c >= std::floor(0.01 * 300));
        CHECK(c <= 0.04 * 300);
      }
      CHECK(std::accumulate(a.catalog.popularity.begin(), a.catalog.popularity.end(), 0.0) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("second scenario has one shared cache") {
      auto two = scenario_two_options();
      two.users = 100;
      two.contents = 300;
      const auto b = generate_scenario_two(7, two);
      CHECK_NOTHROW(validate(b));
      CHECK(b.cache_count() == 1);
      CHECK(b.topology.capacities[0] == doctest::Approx(15.0));
      for (const auto& acc : b.topology.access) CHECK(acc == std::vector<int>{0});
    }
  }

  TEST_CASE("baseline recommendations") {
    auto s = testing_support::tiny_scenario(2, {.users = 2, .contents = 7, .rec_count = 5, .capacity = 2.0});
    s.pricing.revenue.row(0) << 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3;
    s.pricing.revenue.row(1) << 0.5, 0.5, 0.1, 0.5, 0.5, 0.5, 0.5;  // six equal, five slots
    const Matrix y = baseline_recommendations(s);
    Matrix expected(2, 7);
    expected << 1, 1, 1, 1, 1, 0, 0, 1, 1, 0, 1, 1, 1, 0;
    CHECK(y == expected);
    // random rows against a stable sort
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
      for (Eigen::Index i = 0; i < 7; ++i) s.pricing.revenue(0, i) = std::round(unit(gen) * 4.0) / 4.0;
      std::vector<Eigen::Index> idx(7);
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(),
                       [&](Eigen::Index a, Eigen::Index b) { return s.pricing.revenue(0, a) > s.pricing.revenue(0, b); });
      const Matrix yy = baseline_recommendations(s);
      for (std::size_t k = 0; k < 7; ++k) CHECK(yy(0, idx[k]) == (k < 5 ? 1.0 : 0.0));
    }
  }

  TEST_CASE("baseline caching") {
    SUBCASE("unit sizes") {
      const Matrix x = baseline_caching(caching_case({0.9, 0.3, 0.6}, {1, 1, 1}, 2.0));
      CHECK(x(0, 0) == 1.0);
      CHECK(x(1, 0) == 0.0);
      CHECK(x(2, 0) == 1.0);
    }
    SUBCASE("zero capacity") {
      CHECK(baseline_caching(caching_case({0.9, 0.3, 0.6}, {1, 1, 1}, 0.0)).sum() == 0.0);
    }
    SUBCASE("sizes: the greedy skips what does not fit and keeps going") {
      // ranked 0, 1, 2; content 1 (size 3) no longer fits after content 0
      const Matrix x = baseline_caching(caching_case({0.9, 0.6, 0.3}, {1, 3, 1}, 3.0));
      CHECK(x(0, 0) == 1.0);
      CHECK(x(1, 0) == 0.0);
      CHECK(x(2, 0) == 1.0);
    }
    SUBCASE("ties go to the lower index") {
      const Matrix x = baseline_caching(caching_case({0.5, 0.5, 0.5}, {1, 1, 1}, 1.0));
      CHECK(x(0, 0) == 1.0);
      CHECK(x.sum() == 1.0);
    }
  }

  TEST_CASE("JSON round trip is exact") {
    const auto s = generate_scenario_two(3, testing_support::small_options(6, 40));
    const auto text = scenario_to_json(s);
    const auto back = scenario_from_json(text);
    CHECK(scenario_to_json(back) == text);
    CHECK(back.users.relevance == s.users.relevance);
    CHECK(back.pricing.revenue == s.pricing.revenue);
    CHECK(back.topology.edge_cost == s.topology.edge_cost);
    const TempFile f("scenario.json", "");
    save_scenario(s, f.path);
    CHECK(scenario_hash(load_scenario(f.path)) == scenario_hash(s));
    CHECK_THROWS_AS(scenario_from_json("{\"schema_version\": 99}"), InputError);
    CHECK_THROWS_AS(scenario_from_json("not json"), InputError);
  }

  TEST_CASE("two-user example is valid") {
    const auto s = toy_scenario();
    CHECK_NOTHROW(validate(s));
    CHECK(s.user_count() == 2);
    CHECK(s.content_count() == 4);
    CHECK(s.pricing.rho == 0.3);
  }
}
