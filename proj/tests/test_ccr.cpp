#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "cooprec/ccr.hpp"
#include "cooprec/descent.hpp"
#include "cooprec/errors.hpp"
#include "cooprec/metrics.hpp"
#include "cooprec/oracle.hpp"
#include "cooprec/scenario.hpp"
#include "support.hpp"

using namespace cooprec;

namespace {

// Gains read straight from the problem; one user, N = 1, constant margins.
BargainingProblem constant_problem(double cp_value, double cp_base, double cdn_value, double cdn_base) {
  BargainingProblem p;
  p.cp.margin = Matrix::Constant(1, 2, cp_value);
  p.cp.baseline = cp_base;
  p.cdn.margin = Matrix::Constant(1, 2, cdn_value);
  p.cdn.baseline = cdn_base;
  p.row_targets = {1.0};
  p.baseline_y = Matrix::Zero(1, 2);
  p.baseline_y(0, 0) = 1.0;
  return p;
}

// Swapping the two users turns one party's utility into the other's.
BargainingProblem mirrored_problem() {
  BargainingProblem p;
  p.cp.margin.resize(2, 3);
  p.cp.margin << 0.40, 0.10, 0.30, 0.05, 0.35, 0.20;
  p.cdn.margin.resize(2, 3);
  p.cdn.margin << 0.05, 0.35, 0.20, 0.40, 0.10, 0.30;
  p.baseline_y = Matrix::Zero(2, 3);
  p.baseline_y(0, 0) = 1.0;
  p.baseline_y(1, 0) = 1.0;
  p.cp.baseline = p.cp.value(p.baseline_y);
  p.cdn.baseline = p.cdn.value(p.baseline_y);
  p.row_targets = {1.0, 1.0};
  return p;
}

}  // namespace

TEST_SUITE("ccr") {
  TEST_CASE("two-user example matches the enumeration of discrete policies") {
    const auto s = toy_scenario();
    const auto out = solve_ccr(s);
    REQUIRE(out.agreement());
    double best = std::numeric_limits<double>::infinity();
    Matrix arg;
    for (const auto& y : oracle::discrete_policies({1, 1}, 4)) {
      const double g1 = cp_utility(s, y) - cp_baseline_utility(s);
      const double g2 = cdn_utility(s, y) - cdn_baseline_utility(s);
      if (g1 > 0 && g2 > 0 && -std::log(g1) - std::log(g2) < best) {
        best = -std::log(g1) - std::log(g2);
        arg = y;
      }
    }
    CHECK(out.objective == doctest::Approx(best).epsilon(1e-6));
    CHECK((out.y_star - arg).cwiseAbs().maxCoeff() < 1e-4);
    // and no 0.05 grid point does better
    const auto grid = oracle::enumerate_nash(s, 0.05);
    CHECK(out.objective <= grid.best.objective + 1e-9);
    // both parties gain 20%
    const auto g = relative_gains(out);
    CHECK(g.cp_pct == doctest::Approx(20.0).epsilon(1e-4));
    CHECK(g.cdn_pct == doctest::Approx(20.0).epsilon(1e-4));
  }

  TEST_CASE("symmetric instance splits the gains equally") {
    const auto p = mirrored_problem();
    const auto out = solve_bargaining(p, RowFeasibleSet::for_problem(p), {});
    REQUIRE(out.agreement());
    CHECK(std::abs(out.cp_gain - out.cdn_gain) / std::max(out.cp_gain, out.cdn_gain) < 1e-3);
  }

  TEST_CASE("disagreement keeps the baseline") {
    const auto s = testing_support::tiny_scenario(3, {.users = 2, .contents = 2, .rec_count = 2});
    const auto out = solve_ccr(s);
    CHECK(out.status == BargainStatus::disagreement);
    CHECK(out.y_star == s.baseline.y_b);
    CHECK(out.cp_gain == 0.0);
    CHECK(out.cdn_gain == 0.0);
  }

  TEST_CASE("nash objective values") {
    const auto unit = constant_problem(2.0, 1.0, 3.0, 2.0);
    const Matrix y = unit.baseline_y;
    CHECK(nash_objective(unit, y) == doctest::Approx(0.0));
    const double e = std::exp(1.0);
    const auto ee = constant_problem(2.0, 2.0 - e, 3.0, 3.0 - e);
    CHECK(nash_objective(ee, y) == doctest::Approx(-2.0));
    CHECK_THROWS_AS(nash_objective(constant_problem(1.0, 1.0, 3.0, 2.0), y), BarrierViolation);
    CHECK_THROWS_AS(nash_gradient(constant_problem(1.0, 2.0, 3.0, 2.0), y), BarrierViolation);
  }

  TEST_CASE("nash objective matches the model utilities") {
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 16; ++seed) {
      const auto s = testing_support::tiny_scenario(seed, {.users = 2, .contents = 4});
      const auto ip = find_interior_point(s, make_row_set(s, {}), {});
      if (!ip.agreement) continue;
      ++checked;
      const double g1 = cp_utility(s, ip.y) - cp_baseline_utility(s);
      const double g2 = cdn_utility(s, ip.y) - cdn_baseline_utility(s);
      CHECK(nash_objective(s, ip.y) == doctest::Approx(-std::log(g1) - std::log(g2)).epsilon(1e-12));
    }
    CHECK(checked >= 4);
  }

  TEST_CASE("nash gradient against central differences") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> unit(-0.05, 0.05);
    int points = 0;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      const auto s = testing_support::tiny_scenario(seed, {.users = 2, .contents = 4});
      const auto ip = find_interior_point(s, make_row_set(s, {}), {});
      if (!ip.agreement) continue;
      for (int k = 0; k < 3; ++k) {
        Matrix y = ip.y;
        for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] += unit(gen) * 0.1;
        const auto p = make_bargaining_problem(s);
        if (!(p.cp.gain(y) > 0 && p.cdn.gain(y) > 0)) continue;
        ++points;
        const Matrix g = nash_gradient(s, y);
        const Matrix fd =
            oracle::finite_difference_gradient([&](const Matrix& m) { return nash_objective(s, m); }, y, 1e-6);
        CHECK((g - fd).norm() <= 1e-5 * g.norm());
      }
    }
    CHECK(points >= 6);
  }

  TEST_CASE("zero coefficient gives a zero gradient entry") {
    auto p = mirrored_problem();
    p.cp.margin(0, 2) = 0.0;
    p.cdn.margin(0, 2) = 0.0;
    Matrix y = Matrix::Constant(2, 3, 1.0 / 3.0);
    y(0, 0) = 0.2;
    y(0, 1) = 0.6;
    y(0, 2) = 0.2;
    if (p.cp.gain(y) > 0 && p.cdn.gain(y) > 0) CHECK(nash_gradient(p, y)(0, 2) == 0.0);
  }

  TEST_CASE("rounding to a discrete policy") {
    Matrix y(1, 3);
    y << 0.5, 0.5, 1.0;
    const std::vector<int> n{2};
    Matrix r = round_to_discrete(y, n);
    CHECK(r(0, 0) == 1.0);
    CHECK(r(0, 1) == 0.0);
    CHECK(r(0, 2) == 1.0);
    Matrix integral(2, 3);
    integral << 1, 0, 1, 0, 1, 1;
    const std::vector<int> n2{2, 2};
    CHECK(round_to_discrete(integral, n2) == integral);
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix rnd(3, 10);
    for (Eigen::Index i = 0; i < rnd.size(); ++i) rnd.data()[i] = unit(gen);
    const std::vector<int> n3{1, 4, 7};
    const Matrix d = round_to_discrete(rnd, n3);
    for (Eigen::Index u = 0; u < 3; ++u) CHECK(d.row(u).sum() == n3[static_cast<std::size_t>(u)]);
  }

  TEST_CASE("Pareto optimal and proportionally fair on a 0.02 grid") {
    // one user, three contents: the baseline content and one favouring each side;
    // losses stay below gains so an even mix improves both
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 6; ++t) {
      BargainingProblem p;
      p.cp.margin.resize(1, 3);
      p.cdn.margin.resize(1, 3);
      const double a0 = 0.2 + 0.2 * unit(gen), b0 = 0.2 + 0.2 * unit(gen);
      p.cp.margin << a0, a0 + 0.05 + 0.2 * unit(gen), a0 - 0.01 - 0.04 * unit(gen);
      p.cdn.margin << b0, b0 - 0.01 - 0.04 * unit(gen), b0 + 0.05 + 0.2 * unit(gen);
      p.baseline_y = Matrix::Zero(1, 3);
      p.baseline_y(0, 0) = 1.0;
      p.cp.baseline = p.cp.value(p.baseline_y);
      p.cdn.baseline = p.cdn.value(p.baseline_y);
      p.row_targets = {1.0};
      const auto out = solve_bargaining(p, RowFeasibleSet::for_problem(p), {});
      CAPTURE(t);
      REQUIRE(out.agreement());
      const double a1 = out.cp_gain, a2 = out.cdn_gain;
      // the same sum on raw utilities is reported, not asserted
      double raw_worst = -1e300;
      for (int i = 0; i <= 50; ++i) {
        for (int j = 0; i + j <= 50; ++j) {
          Matrix y(1, 3);
          y << i * 0.02, j * 0.02, 1.0 - (i + j) * 0.02;
          const double b1 = p.cp.gain(y), b2 = p.cdn.gain(y);
          const bool dominates = b1 >= a1 - 1e-6 && b2 >= a2 - 1e-6 && (b1 > a1 + 1e-6 || b2 > a2 + 1e-6);
          CHECK_FALSE(dominates);
          CHECK((b1 - a1) / a1 + (b2 - a2) / a2 <= 1e-6);
          raw_worst = std::max(raw_worst, (p.cp.value(y) - out.cp_utility) / out.cp_utility +
                                              (p.cdn.value(y) - out.cdn_utility) / out.cdn_utility);
        }
      }
      MESSAGE("instance " << t << ": largest raw-utility proportional sum " << raw_worst);
    }
  }

  TEST_CASE("descent never increases the objective") {
    const auto s = testing_support::tiny_scenario(2, {.users = 3, .contents = 4, .rec_count = 2, .capacity = 2.0});
    const auto p = make_bargaining_problem(s);
    const auto rows = RowFeasibleSet::for_problem(p);
    const auto ip = find_interior_point(p, rows, {});
    REQUIRE(ip.agreement);
    const auto flat = [&](const Vector& v) { return Eigen::Map<const Matrix>(v.data(), 3, 4); };
    DescentProblem dp;
    dp.value = [&](const Vector& v) {
      const Matrix y = flat(v);
      const double g1 = p.cp.gain(y), g2 = p.cdn.gain(y);
      if (!(g1 > 0 && g2 > 0)) return std::numeric_limits<double>::infinity();
      return -std::log(g1) - std::log(g2);
    };
    dp.gradient = [&](const Vector& v, Vector& g) {
      const Matrix m = nash_gradient(p, flat(v));
      g = Eigen::Map<const Vector>(m.data(), m.size());
    };
    dp.project = [&](Vector& v) { rows.project(std::span<double>(v.data(), static_cast<std::size_t>(v.size()))); };
    std::vector<double> values;
    const auto r = projected_gradient_descent(dp, Eigen::Map<const Vector>(ip.y.data(), ip.y.size()), {},
                                              [&](int, double f) { values.push_back(f); });
    CHECK(r.converged);
    for (std::size_t k = 1; k < values.size(); ++k) CHECK(values[k] <= values[k - 1]);
  }

  TEST_CASE("scaling one party leaves the policy unchanged") {
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto s = testing_support::tiny_scenario(seed, {.users = 3, .contents = 4, .rec_count = 2, .capacity = 2.0});
      auto p = make_bargaining_problem(s);
      const auto rows = RowFeasibleSet::for_problem(p);
      const auto a = solve_bargaining(p, rows, {});
      if (!a.agreement()) continue;
      ++checked;
      p.cdn.margin *= 7.5;
      p.cdn.baseline *= 7.5;
      const auto b = solve_bargaining(p, rows, {});
      REQUIRE(b.agreement());
      CHECK((a.y_star - b.y_star).cwiseAbs().maxCoeff() < 1e-5);
    }
    CHECK(checked >= 3);
  }

  TEST_CASE("quality floors are respected") {
    ScenarioOptions o;
    o.users = 10;
    o.contents = 200;
    const auto s = generate_scenario_one(3, o);
    CcrConfig c;
    c.qor_thresholds = std::vector<double>(10, 0.97);
    const auto out = solve_ccr(s, c);
    REQUIRE(out.agreement());
    const auto q = quality_of_recommendations(s, out.y_star);
    CHECK(q.per_user_min >= 0.97 - 1e-6);
    const auto free = solve_ccr(s);
    CHECK(out.objective >= free.objective - 1e-9);
  }

  TEST_CASE("rows stay feasible") {
    ScenarioOptions o;
    o.users = 12;
    o.contents = 300;
    const auto s = generate_scenario_one(1, o);
    const auto out = solve_ccr(s);
    REQUIRE(out.agreement());
    CHECK(out.converged);
    for (Eigen::Index u = 0; u < 12; ++u) CHECK(out.y_star.row(u).sum() == doctest::Approx(5.0).epsilon(1e-8));
    CHECK(out.y_star.minCoeff() >= 0.0);
    CHECK(out.y_star.maxCoeff() <= 1.0);
  }
}
