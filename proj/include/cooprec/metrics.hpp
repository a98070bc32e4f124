#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cooprec/ccr.hpp"
#include "cooprec/ccrcache.hpp"
#include "cooprec/dcr.hpp"

namespace cooprec {

/// Percent gains 100 (U - U^b) / U^b etc. When a baseline is zero the
/// percentages are NaN, `absolute` is set and only the absolute gains hold.
struct RelativeGains {
  double cp_pct = 0.0;
  double cdn_pct = 0.0;
  double total_pct = 0.0;
  double cp_abs = 0.0;
  double cdn_abs = 0.0;
  bool absolute = false;
};

RelativeGains relative_gains(const BargainOutcome& outcome);
RelativeGains relative_gains(double cp_utility, double cp_baseline, double cdn_utility, double cdn_baseline);

struct HitRate {
  double rate = 0.0;  ///< capped per request, normalised by sum alpha_u
  double raw = 0.0;   ///< the uncapped, unnormalised sum
};

/// Small-cache hit rate of recommendation-driven requests under X^b.
HitRate cache_hit_rate(const Scenario& scenario, const Matrix& y);
/// Same under an explicit |K| x C caching matrix (continuous allowed).
HitRate cache_hit_rate(const Scenario& scenario, const Matrix& y, const Matrix& x);

struct QualityReport {
  double aggregate = 0.0;
  double per_user_min = 0.0;
  double per_user_max = 0.0;
  std::vector<double> per_user;
};

/// QoR_u = sum_i r_ui y_ui over the sum of the user's N_u best relevances.
QualityReport quality_of_recommendations(const Scenario& scenario, const Matrix& y);

// ---------------------------------------------------------------------------
// Solver dispatch

enum class SolverKind { ccr, dcr, ccrcache, profitmax };

const char* to_string(SolverKind kind);
/// Throws ContractViolation on an unknown name.
SolverKind parse_solver(const std::string& name);

struct SolverSettings {
  CcrConfig ccr;
  DcrConfig dcr;
  CcrCacheConfig ccrcache;
  bool keep_trace = false;
};

/// Canonical JSON of the settings (the config hash is taken over it).
std::string settings_to_json(const SolverSettings& settings);
/// Reads the keys written by settings_to_json; absent keys keep defaults.
SolverSettings settings_from_json(const std::string& text);
std::string config_hash(const SolverSettings& settings, SolverKind kind);

struct SolveRecord {
  SolverKind solver = SolverKind::ccr;
  double rho = 0.0;
  std::optional<double> cache_fraction;
  std::string status;  ///< agreement, disagreement, profit_max or error
  std::string error;
  RelativeGains gains;
  double cp_utility = 0.0;
  double cdn_utility = 0.0;
  double cp_baseline = 0.0;
  double cdn_baseline = 0.0;
  double objective = 0.0;
  HitRate hit_rate;
  HitRate baseline_hit_rate;
  QualityReport quality;
  int iterations = 0;
  bool converged = true;
  bool stalled = false;
  double coupling_violation = std::numeric_limits<double>::quiet_NaN();
  Matrix y;
  Matrix x;  ///< |K| x C caching used for the hit rate
  AdmmTrace trace;
};

SolveRecord run_solver(const Scenario& scenario, SolverKind kind, const SolverSettings& settings);

// ---------------------------------------------------------------------------
// Sweeps and reports

struct ReportHeader {
  std::string scenario_hash;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = COOPREC_VERSION;
};

struct SweepOptions {
  std::vector<double> rho_values;
  /// Optional second axis: every small cache resized to this catalog
  /// fraction with the baseline caching recomputed.
  std::vector<double> cache_fractions;
  unsigned jobs = 1;
};

struct TrendFlags {
  bool cp_nondecreasing = true;
  bool cdn_nonincreasing = true;
  bool gains_positive = true;
  bool hit_rate_not_below_baseline = true;
  bool has_disagreement = false;
};

struct SweepReport {
  ReportHeader header;
  SolverKind solver = SolverKind::ccr;
  std::vector<SolveRecord> rows;  ///< ordered by (cache fraction, rho)
  TrendFlags trends;
};

/// Scenario with every small-cache capacity set to floor(fraction |K|) and
/// X^b rebuilt.
Scenario with_cache_fraction(const Scenario& scenario, double fraction);

SweepReport sweep_discount(const Scenario& scenario, SolverKind kind, const SolverSettings& settings,
                           const SweepOptions& options);

/// Flags computed over the Agreement rows of each cache-fraction block.
TrendFlags compute_trends(const std::vector<SolveRecord>& rows);

ReportHeader make_header(const Scenario& scenario, const SolverSettings& settings, SolverKind kind);

void write_sweep_csv(const SweepReport& report, std::ostream& out);
std::string sweep_json(const SweepReport& report, bool include_traces = false);
void write_outcome_json(const ReportHeader& header, const SolveRecord& record, std::ostream& out);
void write_metrics_csv(const ReportHeader& header, const SolveRecord& record, std::ostream& out);
void write_trace_csv(const ReportHeader& header, const AdmmTrace& trace, std::ostream& out);

/// Column list of the sweep and metrics CSV files, in order.
const std::vector<std::string>& report_columns();

}  // namespace cooprec
