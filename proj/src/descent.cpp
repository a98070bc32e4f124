#include "cooprec/descent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cooprec/errors.hpp"

namespace cooprec {

namespace {
constexpr double kMinStep = 1e-14;
constexpr double kMaxStep = 1e14;
constexpr int kMaxBacktracks = 80;
}  // namespace

DescentResult projected_gradient_descent(const DescentProblem& problem, Vector start, const DescentOptions& options,
                                         const std::function<void(int, double)>& on_accept) {
  const StepRule& rule = options.step_rule;
  require(rule.initial_step > 0.0 && rule.shrink > 0.0 && rule.shrink < 1.0 && rule.sufficient_decrease > 0.0,
          "invalid step rule");
  DescentResult out;
  Vector x = std::move(start);
  problem.project(x);
  double f = problem.value(x);
  if (!std::isfinite(f)) throw BarrierViolation("descent started outside the objective's domain");

  Vector g(x.size());
  problem.gradient(x, g);
  Vector probe(x.size());
  Vector trial(x.size());
  Vector g_trial(x.size());
  double step = rule.initial_step;

  for (int it = 0;; ++it) {
    probe = x - g;
    problem.project(probe);
    out.projected_gradient_norm = (x - probe).norm();
    out.iterations = it;
    if (out.projected_gradient_norm < options.tolerance) {
      out.converged = true;
      break;
    }
    if (it >= options.max_iterations) break;

    double t = step;
    bool accepted = false;
    double f_trial = f;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      trial = x - t * g;
      problem.project(trial);
      f_trial = problem.value(trial);
      if (!std::isfinite(f_trial)) {
        ++out.barrier_rejections;
      } else if (f_trial <= f + rule.sufficient_decrease * g.dot(trial - x)) {
        accepted = true;
        break;
      }
      t *= rule.shrink;
      if (t < kMinStep) break;
    }
    if (!accepted) {
      out.line_search_failed = true;
      break;
    }

    problem.gradient(trial, g_trial);
    const Vector s = trial - x;
    const double sy = s.dot(g_trial - g);
    const double ss = s.squaredNorm();
    if (sy > 0.0 && ss > 0.0) {
      step = std::clamp(ss / sy, kMinStep, kMaxStep);
    } else {
      step = std::min(t / rule.shrink, kMaxStep);
    }
    x.swap(trial);
    g.swap(g_trial);
    f = f_trial;
    if (on_accept) on_accept(it + 1, f);
  }
  out.x = std::move(x);
  out.value = f;
  return out;
}

}  // namespace cooprec
