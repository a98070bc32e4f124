#include "cooprec/metrics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <thread>

#include "cooprec/errors.hpp"
#include "cooprec/scenario.hpp"
#include "json.hpp"

namespace cooprec {

namespace {

using nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

json num_json(double v) { return std::isfinite(v) ? json(v) : json(num(v)); }

json step_rule_json(const StepRule& r) {
  return {{"initial_step", r.initial_step}, {"shrink", r.shrink}, {"sufficient_decrease", r.sufficient_decrease}};
}

json inner_json(const InnerSolverConfig& c) {
  return {{"max_iterations", c.max_iterations},
          {"initial_tolerance", c.initial_tolerance},
          {"tolerance_decay", c.tolerance_decay},
          {"tolerance_floor", c.tolerance_floor},
          {"step_rule", step_rule_json(c.step_rule)}};
}

json feasibility_json(const InteriorPointOptions& o) {
  return {{"iterations", o.iterations}, {"margin_scale", o.margin_scale}};
}

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

void read_step_rule(const json& j, StepRule& r) {
  read(j, "initial_step", r.initial_step);
  read(j, "shrink", r.shrink);
  read(j, "sufficient_decrease", r.sufficient_decrease);
}

void read_inner(const json& j, InnerSolverConfig& c) {
  read(j, "max_iterations", c.max_iterations);
  read(j, "initial_tolerance", c.initial_tolerance);
  read(j, "tolerance_decay", c.tolerance_decay);
  read(j, "tolerance_floor", c.tolerance_floor);
  if (j.contains("step_rule")) read_step_rule(j.at("step_rule"), c.step_rule);
}

void read_feasibility(const json& j, InteriorPointOptions& o) {
  read(j, "iterations", o.iterations);
  read(j, "margin_scale", o.margin_scale);
}

json optional_thresholds(const std::optional<std::vector<double>>& t) { return t ? json(*t) : json(nullptr); }

json record_json(const SolveRecord& r) {
  json j;
  j["solver"] = to_string(r.solver);
  j["rho"] = r.rho;
  j["cache_fraction"] = r.cache_fraction ? json(*r.cache_fraction) : json(nullptr);
  j["status"] = r.status;
  if (!r.error.empty()) j["error"] = r.error;
  j["gains"] = {{"cp_pct", num_json(r.gains.cp_pct)},
                {"cdn_pct", num_json(r.gains.cdn_pct)},
                {"total_pct", num_json(r.gains.total_pct)},
                {"cp_abs", num_json(r.gains.cp_abs)},
                {"cdn_abs", num_json(r.gains.cdn_abs)},
                {"absolute", r.gains.absolute}};
  j["utilities"] = {{"cp", num_json(r.cp_utility)},
                    {"cdn", num_json(r.cdn_utility)},
                    {"cp_baseline", num_json(r.cp_baseline)},
                    {"cdn_baseline", num_json(r.cdn_baseline)}};
  j["objective"] = num_json(r.objective);
  j["hit_rate"] = {{"rate", num_json(r.hit_rate.rate)},
                   {"raw", num_json(r.hit_rate.raw)},
                   {"baseline_rate", num_json(r.baseline_hit_rate.rate)},
                   {"baseline_raw", num_json(r.baseline_hit_rate.raw)}};
  j["qor"] = {{"aggregate", num_json(r.quality.aggregate)},
              {"per_user_min", num_json(r.quality.per_user_min)},
              {"per_user_max", num_json(r.quality.per_user_max)}};
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["stalled"] = r.stalled;
  j["coupling_violation"] = num_json(r.coupling_violation);
  return j;
}

json trace_json(const AdmmTrace& trace) {
  json rows = json::array();
  for (const auto& rec : trace.records) {
    rows.push_back({{"iteration", rec.iteration},
                    {"primal_residual", num_json(rec.primal_residual)},
                    {"dual_residual", num_json(rec.dual_residual)},
                    {"objective", num_json(rec.objective)},
                    {"cp_gain", num_json(rec.cp_gain)},
                    {"cdn_gain", num_json(rec.cdn_gain)},
                    {"coupling_violation", num_json(rec.coupling_violation)},
                    {"cdn_gain_stale", num_json(rec.cdn_gain_stale)},
                    {"cdn_gain_exact", num_json(rec.cdn_gain_exact)}});
  }
  return rows;
}

json header_json(const ReportHeader& h) {
  return {{"scenario_hash", h.scenario_hash}, {"config_hash", h.config_hash}, {"seed", h.seed}, {"version", h.version}};
}

void write_comment_header(const ReportHeader& h, std::ostream& out) {
  out << "# scenario_hash=" << h.scenario_hash << " config_hash=" << h.config_hash << " seed=" << h.seed
      << " version=" << h.version << '\n';
}

void write_record_row(const SolveRecord& r, std::ostream& out) {
  out << to_string(r.solver) << ',' << num(r.rho) << ',' << (r.cache_fraction ? num(*r.cache_fraction) : "") << ','
      << r.status << ',' << num(r.gains.cp_pct) << ',' << num(r.gains.cdn_pct) << ',' << num(r.gains.total_pct)
      << ',' << num(r.gains.cp_abs) << ',' << num(r.gains.cdn_abs) << ',' << (r.gains.absolute ? 1 : 0) << ','
      << num(r.cp_utility) << ',' << num(r.cdn_utility) << ',' << num(r.cp_baseline) << ',' << num(r.cdn_baseline)
      << ',' << num(r.objective) << ',' << num(r.hit_rate.rate) << ',' << num(r.hit_rate.raw) << ','
      << num(r.baseline_hit_rate.rate) << ',' << num(r.quality.aggregate) << ',' << num(r.quality.per_user_min)
      << ',' << num(r.quality.per_user_max) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
      << (r.stalled ? 1 : 0) << ',' << num(r.coupling_violation) << '\n';
}

void fill_from_outcome(SolveRecord& rec, const BargainOutcome& o) {
  rec.status = to_string(o.status);
  rec.cp_utility = o.cp_utility;
  rec.cdn_utility = o.cdn_utility;
  rec.cp_baseline = o.cp_baseline;
  rec.cdn_baseline = o.cdn_baseline;
  rec.objective = o.objective;
  rec.iterations = o.iterations;
  rec.converged = o.converged;
  rec.y = o.y_star;
  if (o.agreement()) {
    rec.gains = relative_gains(o);
  } else {
    rec.gains = RelativeGains{};
  }
}

}  // namespace

RelativeGains relative_gains(double cp_utility, double cp_baseline, double cdn_utility, double cdn_baseline) {
  RelativeGains g;
  g.cp_abs = cp_utility - cp_baseline;
  g.cdn_abs = cdn_utility - cdn_baseline;
  if (cp_baseline == 0.0 || cdn_baseline == 0.0 || cp_baseline + cdn_baseline == 0.0) {
    g.absolute = true;
    g.cp_pct = g.cdn_pct = g.total_pct = kNaN;
    return g;
  }
  g.cp_pct = 100.0 * g.cp_abs / cp_baseline;
  g.cdn_pct = 100.0 * g.cdn_abs / cdn_baseline;
  g.total_pct = 100.0 * (g.cp_abs + g.cdn_abs) / (cp_baseline + cdn_baseline);
  return g;
}

RelativeGains relative_gains(const BargainOutcome& outcome) {
  if (!outcome.agreement()) return RelativeGains{};
  return relative_gains(outcome.cp_utility, outcome.cp_baseline, outcome.cdn_utility, outcome.cdn_baseline);
}

HitRate cache_hit_rate(const Scenario& scenario, const Matrix& y) {
  return cache_hit_rate(scenario, y, scenario.baseline.x_b);
}

HitRate cache_hit_rate(const Scenario& s, const Matrix& y, const Matrix& x) {
  validate_dimensions(s);
  require(y.rows() == static_cast<Eigen::Index>(s.user_count()) &&
              y.cols() == static_cast<Eigen::Index>(s.content_count()),
          "recommendation matrix has wrong shape");
  require(x.rows() == static_cast<Eigen::Index>(s.content_count()) &&
              x.cols() == static_cast<Eigen::Index>(s.cache_count()),
          "caching matrix has wrong shape");
  HitRate out;
  double alpha_sum = 0.0;
  for (std::size_t u = 0; u < s.user_count(); ++u) {
    const double w = s.users.alpha[u] / static_cast<double>(s.users.rec_count[u]);
    alpha_sum += s.users.alpha[u];
    const auto uu = static_cast<Eigen::Index>(u);
    for (Eigen::Index i = 0; i < y.cols(); ++i) {
      double stored = 0.0;
      for (int j : s.topology.access[u]) stored += x(i, j);
      out.raw += w * y(uu, i) * stored;
      out.rate += w * y(uu, i) * std::min(stored, 1.0);
    }
  }
  out.rate = alpha_sum > 0.0 ? out.rate / alpha_sum : 0.0;
  return out;
}

QualityReport quality_of_recommendations(const Scenario& s, const Matrix& y) {
  const auto& r = s.users.relevance;
  require(y.rows() == r.rows() && y.cols() == r.cols(), "recommendation matrix has wrong shape");
  QualityReport out;
  out.per_user.resize(static_cast<std::size_t>(r.rows()));
  for (Eigen::Index u = 0; u < r.rows(); ++u) {
    std::vector<double> row(r.row(u).begin(), r.row(u).end());
    const auto n = static_cast<std::size_t>(s.users.rec_count[static_cast<std::size_t>(u)]);
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(n), row.end(), std::greater<>());
    double best = 0.0;
    for (std::size_t k = 0; k < n; ++k) best += row[k];
    const double got = r.row(u).dot(y.row(u));
    out.per_user[static_cast<std::size_t>(u)] = best > 0.0 ? got / best : 0.0;
  }
  if (!out.per_user.empty()) {
    double sum = 0.0;
    for (double q : out.per_user) sum += q;
    out.aggregate = sum / static_cast<double>(out.per_user.size());
    out.per_user_min = *std::min_element(out.per_user.begin(), out.per_user.end());
    out.per_user_max = *std::max_element(out.per_user.begin(), out.per_user.end());
  }
  return out;
}

const char* to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::ccr:
      return "ccr";
    case SolverKind::dcr:
      return "dcr";
    case SolverKind::ccrcache:
      return "ccrcache";
    case SolverKind::profitmax:
      return "profitmax";
  }
  return "unknown";
}

SolverKind parse_solver(const std::string& name) {
  for (auto k : {SolverKind::ccr, SolverKind::dcr, SolverKind::ccrcache, SolverKind::profitmax}) {
    if (name == to_string(k)) return k;
  }
  throw ContractViolation("unknown solver '" + name + "' (expected ccr, dcr, ccrcache or profitmax)");
}

std::string settings_to_json(const SolverSettings& s) {
  json j;
  j["ccr"] = {{"max_iterations", s.ccr.max_iterations},
              {"gradient_tolerance", s.ccr.gradient_tolerance},
              {"step_rule", step_rule_json(s.ccr.step_rule)},
              {"qor_thresholds", optional_thresholds(s.ccr.qor_thresholds)},
              {"feasibility", feasibility_json(s.ccr.feasibility)}};
  j["dcr"] = {{"penalty_q", s.dcr.penalty_q},
              {"max_outer_iterations", s.dcr.max_outer_iterations},
              {"primal_tolerance", s.dcr.primal_tolerance},
              {"dual_tolerance", s.dcr.dual_tolerance},
              {"inner", inner_json(s.dcr.inner)},
              {"warm_start", s.dcr.warm_start},
              {"qor_thresholds", optional_thresholds(s.dcr.qor_thresholds)},
              {"feasibility", feasibility_json(s.dcr.feasibility)}};
  j["ccrcache"] = {{"penalty_q", s.ccrcache.penalty_q},
                   {"penalty_growth", s.ccrcache.penalty_growth},
                   {"penalty_max", s.ccrcache.penalty_max},
                   {"warm_start_from_ccr", s.ccrcache.warm_start_from_ccr},
                   {"refine", s.ccrcache.refine},
                   {"max_refinement_rounds", s.ccrcache.max_refinement_rounds},
                   {"max_outer_iterations", s.ccrcache.max_outer_iterations},
                   {"coupling_tolerance", s.ccrcache.coupling_tolerance},
                   {"inner", inner_json(s.ccrcache.inner)},
                   {"stall_window", s.ccrcache.stall_window},
                   {"stall_improvement", s.ccrcache.stall_improvement},
                   {"stall_coupling_ratio", s.ccrcache.stall_coupling_ratio},
                   {"fix_caching", s.ccrcache.fix_caching},
                   {"feasibility", feasibility_json(s.ccrcache.feasibility)}};
  j["keep_trace"] = s.keep_trace;
  return j.dump();
}

SolverSettings settings_from_json(const std::string& text) {
  SolverSettings s;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    if (j.contains("ccr")) {
      const auto& c = j.at("ccr");
      read(c, "max_iterations", s.ccr.max_iterations);
      read(c, "gradient_tolerance", s.ccr.gradient_tolerance);
      if (c.contains("step_rule")) read_step_rule(c.at("step_rule"), s.ccr.step_rule);
      if (c.contains("qor_thresholds") && !c.at("qor_thresholds").is_null())
        s.ccr.qor_thresholds = c.at("qor_thresholds").get<std::vector<double>>();
      if (c.contains("feasibility")) read_feasibility(c.at("feasibility"), s.ccr.feasibility);
    }
    if (j.contains("dcr")) {
      const auto& c = j.at("dcr");
      read(c, "penalty_q", s.dcr.penalty_q);
      read(c, "max_outer_iterations", s.dcr.max_outer_iterations);
      read(c, "primal_tolerance", s.dcr.primal_tolerance);
      read(c, "dual_tolerance", s.dcr.dual_tolerance);
      if (c.contains("inner")) read_inner(c.at("inner"), s.dcr.inner);
      read(c, "warm_start", s.dcr.warm_start);
      if (c.contains("qor_thresholds") && !c.at("qor_thresholds").is_null())
        s.dcr.qor_thresholds = c.at("qor_thresholds").get<std::vector<double>>();
      if (c.contains("feasibility")) read_feasibility(c.at("feasibility"), s.dcr.feasibility);
    }
    if (j.contains("ccrcache")) {
      const auto& c = j.at("ccrcache");
      read(c, "penalty_q", s.ccrcache.penalty_q);
      read(c, "penalty_growth", s.ccrcache.penalty_growth);
      read(c, "penalty_max", s.ccrcache.penalty_max);
      read(c, "warm_start_from_ccr", s.ccrcache.warm_start_from_ccr);
      read(c, "refine", s.ccrcache.refine);
      read(c, "max_refinement_rounds", s.ccrcache.max_refinement_rounds);
      read(c, "max_outer_iterations", s.ccrcache.max_outer_iterations);
      read(c, "coupling_tolerance", s.ccrcache.coupling_tolerance);
      if (c.contains("inner")) read_inner(c.at("inner"), s.ccrcache.inner);
      read(c, "stall_window", s.ccrcache.stall_window);
      read(c, "stall_improvement", s.ccrcache.stall_improvement);
      read(c, "stall_coupling_ratio", s.ccrcache.stall_coupling_ratio);
      read(c, "fix_caching", s.ccrcache.fix_caching);
      if (c.contains("feasibility")) read_feasibility(c.at("feasibility"), s.ccrcache.feasibility);
    }
    read(j, "keep_trace", s.keep_trace);
  } catch (const json::exception& e) {
    throw InputError(std::string("config has a field of the wrong type: ") + e.what());
  }
  return s;
}

std::string config_hash(const SolverSettings& settings, SolverKind kind) {
  return fnv1a_hex(std::string(to_string(kind)) + "|" + settings_to_json(settings));
}

ReportHeader make_header(const Scenario& scenario, const SolverSettings& settings, SolverKind kind) {
  ReportHeader h;
  h.scenario_hash = scenario_hash(scenario);
  h.config_hash = config_hash(settings, kind);
  h.seed = scenario.seed;
  return h;
}

SolveRecord run_solver(const Scenario& scenario, SolverKind kind, const SolverSettings& settings) {
  SolveRecord rec;
  rec.solver = kind;
  rec.rho = scenario.pricing.rho;
  rec.x = scenario.baseline.x_b;
  try {
    switch (kind) {
      case SolverKind::ccr:
        fill_from_outcome(rec, solve_ccr(scenario, settings.ccr));
        break;
      case SolverKind::dcr: {
        auto r = solve_dcr(scenario, settings.dcr);
        fill_from_outcome(rec, r.outcome);
        rec.trace = std::move(r.trace);
        break;
      }
      case SolverKind::ccrcache: {
        auto r = solve_ccrcache(scenario, settings.ccrcache);
        fill_from_outcome(rec, r.outcome.bargain);
        rec.x = r.outcome.x;
        rec.stalled = r.outcome.stalled;
        rec.coupling_violation = r.outcome.coupling_violation;
        rec.trace = std::move(r.trace);
        break;
      }
      case SolverKind::profitmax: {
        auto r = profit_max_baseline(scenario);
        rec.status = "profit_max";
        rec.y = r.y;
        rec.x = r.x;
        rec.cp_utility = r.cp_utility;
        rec.cdn_utility = r.cdn_utility;
        rec.cp_baseline = r.cp_baseline;
        rec.cdn_baseline = r.cdn_baseline;
        rec.objective = r.aggregate_profit;
        rec.iterations = r.alternations;
        rec.converged = r.stationary;
        rec.gains = relative_gains(r.cp_utility, r.cp_baseline, r.cdn_utility, r.cdn_baseline);
        break;
      }
    }
    rec.hit_rate = cache_hit_rate(scenario, rec.y, rec.x);
    rec.baseline_hit_rate = cache_hit_rate(scenario, scenario.baseline.y_b);
    rec.quality = quality_of_recommendations(scenario, rec.y);
  } catch (const std::exception& e) {
    rec.status = "error";
    rec.error = e.what();
    rec.converged = false;
  }
  return rec;
}

Scenario with_cache_fraction(const Scenario& scenario, double fraction) {
  require(fraction >= 0.0 && fraction <= 1.0, "cache fraction must lie in [0, 1]");
  Scenario out = scenario;
  for (auto& c : out.topology.capacities) c = std::floor(fraction * static_cast<double>(out.content_count()));
  out.baseline.x_b = baseline_caching(out);
  return out;
}

TrendFlags compute_trends(const std::vector<SolveRecord>& rows) {
  TrendFlags f;
  constexpr double kSlack = 1e-9;
  const SolveRecord* prev = nullptr;
  for (const auto& r : rows) {
    if (prev != nullptr && prev->cache_fraction != r.cache_fraction) prev = nullptr;
    if (r.status == "disagreement") f.has_disagreement = true;
    if (r.status != "agreement") continue;
    if (!(r.gains.cp_abs > 0.0) || !(r.gains.cdn_abs > 0.0)) f.gains_positive = false;
    if (r.hit_rate.rate < r.baseline_hit_rate.rate - kSlack) f.hit_rate_not_below_baseline = false;
    if (prev != nullptr) {
      if (r.gains.cp_pct < prev->gains.cp_pct - kSlack) f.cp_nondecreasing = false;
      if (r.gains.cdn_pct > prev->gains.cdn_pct + kSlack) f.cdn_nonincreasing = false;
    }
    prev = &r;
  }
  return f;
}

SweepReport sweep_discount(const Scenario& scenario, SolverKind kind, const SolverSettings& settings,
                           const SweepOptions& options) {
  require(!options.rho_values.empty(), "discount sweep needs at least one rho");
  std::vector<double> rhos = options.rho_values;
  std::sort(rhos.begin(), rhos.end());
  std::vector<std::optional<double>> fractions;
  if (options.cache_fractions.empty()) {
    fractions.emplace_back(std::nullopt);
  } else {
    auto sorted = options.cache_fractions;
    std::sort(sorted.begin(), sorted.end());
    for (double f : sorted) fractions.emplace_back(f);
  }

  std::vector<Scenario> bases;
  for (const auto& f : fractions) bases.push_back(f ? with_cache_fraction(scenario, *f) : scenario);

  const std::size_t total = fractions.size() * rhos.size();
  SweepReport report;
  report.header = make_header(scenario, settings, kind);
  report.solver = kind;
  report.rows.resize(total);
  auto run_one = [&](std::size_t k) {
    const std::size_t fi = k / rhos.size();
    const std::size_t ri = k % rhos.size();
    SolveRecord rec;
    try {
      rec = run_solver(with_discount(bases[fi], rhos[ri]), kind, settings);
    } catch (const std::exception& e) {
      rec.solver = kind;
      rec.status = "error";
      rec.error = e.what();
      rec.converged = false;
    }
    rec.rho = rhos[ri];
    rec.cache_fraction = fractions[fi];
    if (!settings.keep_trace) rec.trace = AdmmTrace{};
    report.rows[k] = std::move(rec);
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(total)));
  if (jobs == 1) {
    for (std::size_t k = 0; k < total; ++k) run_one(k);
  } else {
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t k = w; k < total; k += jobs) run_one(k);
      });
    }
    for (auto& t : workers) t.join();
  }
  report.trends = compute_trends(report.rows);
  return report;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "solver",     "rho",          "cache_fraction", "status",        "cp_pct",        "cdn_pct",
      "total_pct",  "cp_abs",       "cdn_abs",        "absolute",      "cp_utility",    "cdn_utility",
      "cp_baseline", "cdn_baseline", "objective",      "hit_rate",      "hit_rate_raw",  "baseline_hit_rate",
      "qor",        "qor_min",      "qor_max",        "iterations",    "converged",     "stalled",
      "coupling_violation"};
  return cols;
}

void write_sweep_csv(const SweepReport& report, std::ostream& out) {
  write_comment_header(report.header, out);
  const auto& cols = report_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';
  for (const auto& r : report.rows) write_record_row(r, out);
}

void write_metrics_csv(const ReportHeader& header, const SolveRecord& record, std::ostream& out) {
  SweepReport single;
  single.header = header;
  single.rows.push_back(record);
  write_sweep_csv(single, out);
}

std::string sweep_json(const SweepReport& report, bool include_traces) {
  json j;
  j["header"] = header_json(report.header);
  j["solver"] = to_string(report.solver);
  json rows = json::array();
  for (const auto& r : report.rows) {
    auto row = record_json(r);
    if (include_traces) row["trace"] = trace_json(r.trace);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  j["trends"] = {{"cp_nondecreasing", report.trends.cp_nondecreasing},
                 {"cdn_nonincreasing", report.trends.cdn_nonincreasing},
                 {"gains_positive", report.trends.gains_positive},
                 {"hit_rate_not_below_baseline", report.trends.hit_rate_not_below_baseline},
                 {"has_disagreement", report.trends.has_disagreement}};
  return j.dump(2);
}

void write_outcome_json(const ReportHeader& header, const SolveRecord& record, std::ostream& out) {
  json j;
  j["header"] = header_json(header);
  j["outcome"] = record_json(record);
  json y = json::array();
  for (Eigen::Index u = 0; u < record.y.rows(); ++u) {
    json row = json::array();
    for (Eigen::Index i = 0; i < record.y.cols(); ++i) row.push_back(record.y(u, i));
    y.push_back(std::move(row));
  }
  j["y_star"] = std::move(y);
  if (record.solver == SolverKind::ccrcache || record.solver == SolverKind::profitmax) {
    json x = json::array();
    for (Eigen::Index i = 0; i < record.x.rows(); ++i) x.push_back(record.x(i, 0));
    j["x_star"] = std::move(x);
  }
  out << j.dump(2) << '\n';
}

void write_trace_csv(const ReportHeader& header, const AdmmTrace& trace, std::ostream& out) {
  write_comment_header(header, out);
  out << "iteration,primal_residual,dual_residual,objective,cp_gain,cdn_gain,coupling_violation,cdn_gain_stale,cdn_gain_exact\n";
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << num(r.primal_residual) << ',' << num(r.dual_residual) << ',' << num(r.objective)
        << ',' << num(r.cp_gain) << ',' << num(r.cdn_gain) << ',' << num(r.coupling_violation) << ','
        << num(r.cdn_gain_stale) << ',' << num(r.cdn_gain_exact) << '\n';
  }
}

}  // namespace cooprec
