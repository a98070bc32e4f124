#include "doctest.h"

#include <cmath>
#include <random>

#include "cooprec/ccr.hpp"
#include "cooprec/dcr.hpp"
#include "cooprec/metrics.hpp"
#include "cooprec/oracle.hpp"
#include "cooprec/scenario.hpp"
#include "support.hpp"

using namespace cooprec;

namespace {

DcrConfig fixed_iterations(int n, double q) {
  DcrConfig c;
  c.penalty_q = q;
  c.max_outer_iterations = n;
  c.primal_tolerance = 0.0;
  c.dual_tolerance = 0.0;
  c.record_iterates = true;
  return c;
}

Matrix random_matrix(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(gen);
  return m;
}

const testing_support::TinyOptions kTiny{.users = 3, .contents = 4, .rec_count = 2, .capacity = 2.0};

}  // namespace

TEST_SUITE("dcr") {
  // The preset penalties are sized for thousands of variables. Here the
  // optimal duals are of the order of the barrier gradient at Y*, so q is
  // set to a tenth of it.
  TEST_CASE("reaches the centralized optimum on tiny instances") {
    int checked = 0;
    for (std::uint64_t seed = 1; checked < 20 && seed <= 60; ++seed) {
      const auto s = testing_support::tiny_scenario(seed, kTiny);
      const auto ccr = solve_ccr(s);
      if (!ccr.agreement()) continue;
      ++checked;
      const auto p = make_bargaining_problem(s);
      const double q = 0.1 * (p.cp.margin.cwiseAbs().maxCoeff() / ccr.cp_gain +
                              p.cdn.margin.cwiseAbs().maxCoeff() / ccr.cdn_gain);
      const auto r = solve_dcr(s, fixed_iterations(200, q));
      REQUIRE(r.trace.records.size() == 200u);
      const double gap = std::abs(r.trace.records.back().objective - ccr.objective) / std::abs(ccr.objective);
      CAPTURE(seed);
      CHECK(gap < 1e-3);
      CHECK((r.trace.psi.back() - ccr.y_star).norm() < 1e-2);
    }
    CHECK(checked == 20);
  }

  TEST_CASE("two-user example") {
    const auto s = toy_scenario();
    const auto r = solve_dcr(s);
    const auto ccr = solve_ccr(s);
    REQUIRE(r.outcome.agreement());
    CHECK(r.outcome.objective == doctest::Approx(ccr.objective).epsilon(1e-3));
    CHECK((r.outcome.y_star - ccr.y_star).cwiseAbs().maxCoeff() < 1e-3);
  }

  TEST_CASE("runs are reproducible bit for bit") {
    const auto s = testing_support::tiny_scenario(4, kTiny);
    const auto a = solve_dcr(s, fixed_iterations(10, 0.01));
    const auto b = solve_dcr(s, fixed_iterations(10, 0.01));
    REQUIRE_FALSE(a.trace.records.empty());
    CHECK(std::isfinite(a.trace.records.front().primal_residual));
    REQUIRE(a.trace.records.size() == b.trace.records.size());
    for (std::size_t k = 0; k < a.trace.records.size(); ++k) {
      CHECK(a.trace.records[k].primal_residual == b.trace.records[k].primal_residual);
      CHECK(a.trace.records[k].objective == b.trace.records[k].objective);
      CHECK(a.trace.psi[k] == b.trace.psi[k]);
    }
  }

  TEST_CASE("dual update recomputed from the trace") {
    const auto s = testing_support::tiny_scenario(6, kTiny);
    const double q = 0.01;
    const auto r = solve_dcr(s, fixed_iterations(15, q));
    REQUIRE(r.trace.duals.size() == 15u);
    Matrix z = Matrix::Zero(r.trace.psi[0].rows(), r.trace.psi[0].cols());
    for (std::size_t k = 0; k < r.trace.duals.size(); ++k) {
      z += q * (r.trace.psi[k] - r.trace.psi_tilde[k]);
      CHECK((z - r.trace.duals[k]).cwiseAbs().maxCoeff() <= 1e-15);
    }
  }

  TEST_CASE("larger penalty gives the smaller primal residual") {
    int smaller = 0, total = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto s = generate_scenario_one(seed, testing_support::small_options(10, 100));
      const auto lo = solve_dcr(s, fixed_iterations(50, DcrConfig::kLowPenalty));
      const auto hi = solve_dcr(s, fixed_iterations(50, DcrConfig::kHighPenalty));
      if (lo.trace.records.size() < 50 || hi.trace.records.size() < 50) continue;
      ++total;
      if (hi.trace.records[49].primal_residual < lo.trace.records[49].primal_residual) ++smaller;
    }
    REQUIRE(total > 0);
    CHECK(smaller == total);
  }

  TEST_CASE("local steps") {
    const auto s = testing_support::tiny_scenario(2, kTiny);
    const auto p = make_bargaining_problem(s);
    const auto rows = RowFeasibleSet::for_problem(p);
    const auto ip = find_interior_point(p, rows, {});
    REQUIRE(ip.agreement);
    std::mt19937_64 gen(11);

    SUBCASE("gradients against central differences") {
      for (int k = 0; k < 3; ++k) {
        const Matrix psi = ip.y + random_matrix(gen, 3, 4, 1e-3);
        const Matrix other = ip.y + random_matrix(gen, 3, 4, 0.05);
        const Matrix z = random_matrix(gen, 3, 4, 0.1);
        const double q = 0.01 * (k + 1);
        const Matrix g1 = cp_subproblem_gradient(p.cp, psi, other, z, q);
        const Matrix f1 = oracle::finite_difference_gradient(
            [&](const Matrix& m) { return cp_subproblem_objective(p.cp, m, other, z, q); }, psi);
        CHECK((g1 - f1).norm() <= 1e-5 * std::max(1.0, g1.norm()));
        const Matrix g2 = cdn_subproblem_gradient(p.cdn, psi, other, z, q);
        const Matrix f2 = oracle::finite_difference_gradient(
            [&](const Matrix& m) { return cdn_subproblem_objective(p.cdn, m, other, z, q); }, psi);
        CHECK((g2 - f2).norm() <= 1e-5 * std::max(1.0, g2.norm()));
      }
    }

    SUBCASE("a huge penalty reduces to a projection") {
      const double q = 1e6;
      const Matrix z = random_matrix(gen, 3, 4, 1.0);
      Matrix target = ip.y - z / q;
      rows.project(target);
      DescentOptions o;
      o.tolerance = 1e-12;
      const auto a = cp_subproblem(p.cp, rows, ip.y, z, q, ip.y, o);
      CHECK((a.solution - target).cwiseAbs().maxCoeff() < 1e-3);
      Matrix mirrored = ip.y + z / q;
      rows.project(mirrored);
      const auto b = cdn_subproblem(p.cdn, rows, ip.y, z, q, ip.y, o);
      CHECK((b.solution - mirrored).cwiseAbs().maxCoeff() < 1e-3);
    }

    SUBCASE("one inner step decreases the objective") {
      const Matrix z = Matrix::Zero(3, 4);
      DescentOptions o;
      o.max_iterations = 1;
      const double q = DcrConfig::kLowPenalty;
      const Matrix other = ip.y + random_matrix(gen, 3, 4, 0.02);
      const auto a = cp_subproblem(p.cp, rows, other, z, q, ip.y, o);
      CHECK(cp_subproblem_objective(p.cp, a.solution, other, z, q) <
            cp_subproblem_objective(p.cp, ip.y, other, z, q));
      const auto b = cdn_subproblem(p.cdn, rows, other, z, q, ip.y, o);
      CHECK(cdn_subproblem_objective(p.cdn, b.solution, other, z, q) <
            cdn_subproblem_objective(p.cdn, ip.y, other, z, q));
    }
  }

  TEST_CASE("disagreement returns immediately") {
    const auto s = testing_support::tiny_scenario(3, {.users = 2, .contents = 2, .rec_count = 2});
    const auto r = solve_dcr(s);
    CHECK(r.outcome.status == BargainStatus::disagreement);
    CHECK(r.trace.records.empty());
  }

  TEST_CASE("quality floors hold on the reported policy") {
    const auto s = generate_scenario_one(3, testing_support::small_options(10, 200));
    DcrConfig c;
    c.qor_thresholds = std::vector<double>(10, 0.97);
    const auto r = solve_dcr(s, c);
    REQUIRE(r.outcome.agreement());
    CHECK(quality_of_recommendations(s, r.outcome.y_star).per_user_min >= 0.97 - 1e-6);
  }
}
