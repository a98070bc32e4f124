// cooprec: generate scenarios, run the bargaining solvers, sweep the discount.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "cooprec/errors.hpp"
#include "cooprec/metrics.hpp"
#include "cooprec/scenario.hpp"

namespace fs = std::filesystem;
using namespace cooprec;

namespace {

enum Exit { kOk = 0, kUsage = 2, kIo = 3, kUnconverged = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("cooprec");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("COOPREC_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept real names
    if (level != spdlog::level::off || std::string(env) == "off") {
      spdlog::set_level(level);
    } else {
      spdlog::warn("COOPREC_LOG={} not recognised; using warn", env);
    }
  }
}

// a:b:step, inclusive of b up to rounding.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("grid '" + text + "' is not of the form a:b:step");
    }
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw UsageError("grid '" + text + "' is not of the form a:b:step");
  const double a = parts[0], b = parts[1], step = parts[2];
  if (!(step > 0.0) || b < a) throw UsageError("grid '" + text + "' is empty");
  const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (long k = 0; k < count; ++k) out.push_back(std::round((a + static_cast<double>(k) * step) * 1e12) / 1e12);
  return out;
}

SolverSettings load_settings(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return settings_from_json(buf.str());
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

SolverKind solver_or_usage(const std::string& name) {
  try {
    return parse_solver(name);
  } catch (const ContractViolation&) {
    throw UsageError("unknown solver '" + name + "' (ccr, dcr, ccrcache, profitmax)");
  }
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string preset = "scenario1";
  std::uint64_t seed = 1;
  std::string ratings;
  std::string out;
  std::size_t users = 0;
  std::size_t contents = 0;
  double rho = 0.3;
};

int run_generate(const GenerateArgs& a) {
  ScenarioOptions opt = a.preset == "scenario2" ? scenario_two_options() : ScenarioOptions{};
  if (a.users > 0) opt.users = a.users;
  if (a.contents > 0) opt.contents = a.contents;
  opt.rho = a.rho;
  Scenario s;
  if (a.preset == "toy") {
    s = toy_scenario(a.rho);
  } else {
    if (!a.ratings.empty()) {
      const auto load = load_relevance_csv(a.ratings, opt.users, opt.contents);
      if (load.duplicates > 0) spdlog::warn("{} duplicate ratings, last one kept", load.duplicates);
      spdlog::info("{} ratings used, {} entries imputed from user means, {} from the global mean", load.ratings_used,
                   load.imputed_by_user, load.imputed_globally);
      opt.relevance = load.relevance;
    } else if (a.preset == "scenario1") {
      spdlog::warn("no ratings file given; using synthetic relevances");
    }
    s = a.preset == "scenario2" ? generate_scenario_two(a.seed, opt) : generate_scenario_one(a.seed, opt);
  }
  const auto parent = std::filesystem::path(a.out).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  save_scenario(s, a.out);
  std::string fractions;
  for (double c : s.topology.capacities) {
    if (!fractions.empty()) fractions += ',';
    fractions += fmt::format("{:.4g}", c / static_cast<double>(s.content_count()));
  }
  fmt::print("users={} contents={} caches={} lambda={} rho={} capacity_fractions={} hash={}\n", s.user_count(),
             s.content_count(), s.cache_count(), s.pricing.lambda, s.pricing.rho, fractions, scenario_hash(s));
  return kOk;
}

struct SolveArgs {
  std::string scenario;
  std::string solver;
  double rho = std::nan("");
  std::string config;
  std::string out;
  bool strict = false;
};

int run_solve(const SolveArgs& a) {
  const auto kind = solver_or_usage(a.solver);
  auto s = load_scenario(a.scenario);
  if (!std::isnan(a.rho)) s = with_discount(s, a.rho);
  auto settings = load_settings(a.config);
  const auto header = make_header(s, settings, kind);
  spdlog::info("solving {} with {} (scenario {}, config {})", a.scenario, to_string(kind), header.scenario_hash,
               header.config_hash);
  if (kind == SolverKind::dcr) settings.dcr.on_iteration = [](const AdmmRecord& r) {
    spdlog::debug("dcr k={} primal={:.3e} dual={:.3e} objective={:.8g}", r.iteration, r.primal_residual,
                  r.dual_residual, r.objective);
  };
  if (kind == SolverKind::ccrcache) settings.ccrcache.on_iteration = [](const AdmmRecord& r) {
    spdlog::debug("ccrcache k={} coupling={:.3e} objective={:.8g}", r.iteration, r.coupling_violation, r.objective);
  };
  const auto rec = run_solver(s, kind, settings);
  if (rec.status == "error") {
    spdlog::error("solver failed: {}", rec.error);
  }
  ensure_dir(a.out);
  const fs::path dir(a.out);
  {
    auto f = open_out(dir / "outcome.json");
    write_outcome_json(header, rec, f);
  }
  {
    auto f = open_out(dir / "metrics.csv");
    write_metrics_csv(header, rec, f);
  }
  if (kind == SolverKind::dcr || kind == SolverKind::ccrcache) {
    auto f = open_out(dir / "trace.csv");
    write_trace_csv(header, rec.trace, f);
  }
  fmt::print("status={} cp_gain_pct={:.4f} cdn_gain_pct={:.4f} iterations={} converged={}\n", rec.status,
             rec.gains.cp_pct, rec.gains.cdn_pct, rec.iterations, rec.converged);
  if (rec.status == "error") return kUnconverged;
  if (a.strict && !rec.converged) return kUnconverged;
  return kOk;
}

struct SweepArgs {
  std::string scenario;
  std::string solver;
  std::string rho_grid;
  std::string cache_grid;
  std::string config;
  std::string out;
  unsigned jobs = 0;
  bool traces = false;
  bool strict = false;
};

int run_sweep(const SweepArgs& a) {
  const auto kind = solver_or_usage(a.solver);
  SweepOptions opt;
  opt.rho_values = parse_grid(a.rho_grid);
  if (!a.cache_grid.empty()) opt.cache_fractions = parse_grid(a.cache_grid);
  opt.jobs = a.jobs > 0 ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
  const auto s = load_scenario(a.scenario);
  auto settings = load_settings(a.config);
  settings.keep_trace = settings.keep_trace || a.traces;
  const auto report = sweep_discount(s, kind, settings, opt);
  ensure_dir(a.out);
  const fs::path dir(a.out);
  {
    auto f = open_out(dir / "sweep.csv");
    write_sweep_csv(report, f);
  }
  {
    auto f = open_out(dir / "sweep.json");
    f << sweep_json(report, settings.keep_trace) << '\n';
  }
  bool all_converged = true;
  for (const auto& r : report.rows) {
    if (r.status == "error") spdlog::error("rho={} failed: {}", r.rho, r.error);
    all_converged = all_converged && r.converged && r.status != "error";
    fmt::print("rho={} {} cp={:.3f}% cdn={:.3f}% hit={:.3f} qor={:.4f}\n", r.rho, r.status, r.gains.cp_pct,
               r.gains.cdn_pct, r.hit_rate.rate, r.quality.aggregate);
  }
  const auto& t = report.trends;
  fmt::print("trends cp_nondecreasing={} cdn_nonincreasing={} gains_positive={} hit_rate_not_below_baseline={}\n",
             t.cp_nondecreasing, t.cdn_nonincreasing, t.gains_positive, t.hit_rate_not_below_baseline);
  if (a.strict && !all_converged) return kUnconverged;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Cooperative CP/CDN recommendations by Nash bargaining.\n"
               "Exit codes: 0 ok (disagreement included), 2 usage, 3 unreadable or invalid input, 4 unconverged with --strict.\n"
               "Log level from COOPREC_LOG (trace, debug, info, warn, error, off)."};
  app.set_version_flag("--version", COOPREC_VERSION);
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a scenario JSON file");
  g->add_option("--preset", gen.preset, "scenario1, scenario2 or toy")
      ->check(CLI::IsMember({"scenario1", "scenario2", "toy"}))
      ->capture_default_str();
  g->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  g->add_option("--ratings", gen.ratings, "user_id,content_id,rating CSV (0.5-5 stars)");
  g->add_option("--users", gen.users, "Override the preset user count");
  g->add_option("--contents", gen.contents, "Override the preset catalog size");
  g->add_option("--rho", gen.rho, "Discount on the delivery price")->capture_default_str();
  g->add_option("--out", gen.out, "Output path")->required();
  g->footer(
      "Examples:\n"
      "  cooprec generate --preset toy --out toy.json\n"
      "  cooprec generate --preset scenario1 --seed 7 --users 50 --contents 2000 --out s1.json\n"
      "  cooprec generate --preset scenario2 --seed 3 --ratings ratings.csv --out s2.json");

  SolveArgs sol;
  auto* so = app.add_subcommand("solve", "Run one solver on a scenario");
  so->add_option("--scenario", sol.scenario, "Scenario JSON")->required();
  so->add_option("--solver", sol.solver, "ccr, dcr, ccrcache or profitmax")->required();
  so->add_option("--rho", sol.rho, "Override the scenario discount");
  so->add_option("--config", sol.config, "Solver settings JSON");
  so->add_option("--out", sol.out, "Output directory")->required();
  so->add_flag("--strict", sol.strict, "Exit 4 when the solver did not converge");
  so->footer(
      "Writes outcome.json, metrics.csv and, for dcr and ccrcache, trace.csv.\n"
      "Examples:\n"
      "  cooprec solve --scenario toy.json --solver ccr --out out/ccr\n"
      "  cooprec solve --scenario toy.json --solver dcr --rho 0.2 --out out/dcr\n"
      "  cooprec solve --scenario s2.json --solver profitmax --out out/pm");

  SweepArgs sw;
  auto* sp = app.add_subcommand("sweep", "Sweep the discount (optionally crossed with cache sizes)");
  sp->add_option("--scenario", sw.scenario, "Scenario JSON")->required();
  sp->add_option("--solver", sw.solver, "ccr, dcr, ccrcache or profitmax")->required();
  sp->add_option("--rho-grid", sw.rho_grid, "a:b:step, inclusive")->required();
  sp->add_option("--cache-frac-grid", sw.cache_grid, "a:b:step of catalog fractions per small cache");
  sp->add_option("--config", sw.config, "Solver settings JSON");
  sp->add_option("--out", sw.out, "Output directory")->required();
  sp->add_option("--jobs", sw.jobs, "Parallel rows (default: logical cores)");
  sp->add_flag("--traces", sw.traces, "Include ADMM traces in sweep.json");
  sp->add_flag("--strict", sw.strict, "Exit 4 when any row did not converge");
  sp->footer(
      "Writes sweep.csv and sweep.json.\n"
      "Examples:\n"
      "  cooprec sweep --scenario s1.json --solver ccr --rho-grid 0.05:0.5:0.05 --out out/discount\n"
      "  cooprec sweep --scenario s1.json --solver ccr --rho-grid 0.1:0.4:0.1 --cache-frac-grid 0.01:0.3:0.05 --out out/grid\n"
      "  cooprec sweep --scenario s2.json --solver ccrcache --rho-grid 0.2 --jobs 2 --out out/cc");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return run_generate(gen);
    if (*so) return run_solve(sol);
    if (*sp) return run_sweep(sw);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const ContractViolation& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  }
  return kOk;
}
