#include "cooprec/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "cooprec/errors.hpp"
#include "cooprec/rng.hpp"

namespace cooprec {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  return out;
}

bool parse_int(const std::string& s, long long& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

bool parse_double(const std::string& s, double& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end && std::isfinite(out);
}

std::vector<long long> smallest(const std::set<long long>& ids, std::size_t count, const char* what) {
  if (ids.size() < count) {
    throw InputError(std::string("ratings file has ") + std::to_string(ids.size()) + " distinct " + what +
                     " ids, expected at least " + std::to_string(count));
  }
  return {ids.begin(), std::next(ids.begin(), static_cast<std::ptrdiff_t>(count))};
}

std::vector<int> top_indices(std::span<const double> values, std::size_t n) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int l, int r) { return values[l] > values[r]; });
  order.resize(n);
  return order;
}

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

Matrix revenue_from(const Matrix& relevance, const RevenueMap& map) {
  Matrix r(relevance.rows(), relevance.cols());
  for (Eigen::Index u = 0; u < r.rows(); ++u)
    for (Eigen::Index i = 0; i < r.cols(); ++i) r(u, i) = map(relevance(u, i));
  return r;
}

// Antithetic pairs v, lo + hi - v keep the sample mean at the midpoint.
std::vector<double> draw_alpha(Rng& rng, std::size_t users, double lo, double hi) {
  std::vector<double> alpha(users);
  const double mid = 0.5 * (lo + hi);
  for (std::size_t u = 0; u + 1 < users; u += 2) {
    const double v = rng.uniform(lo, hi);
    alpha[u] = v;
    alpha[u + 1] = std::min(lo + hi - v, std::nextafter(hi, lo));
  }
  if (users % 2 == 1) alpha[users - 1] = mid;
  return alpha;
}

Scenario assemble(std::uint64_t seed, const ScenarioOptions& o, bool single_cache) {
  require(o.users > 0 && o.contents > 0, "scenario needs users and contents");
  require(o.rec_count >= 1 && static_cast<std::size_t>(o.rec_count) <= o.contents, "rec_count outside [1, |K|]");
  require(o.caches >= 1 && o.caches_per_user >= 1 && o.caches_per_user <= o.caches, "bad cache topology knobs");
  require(o.edge_cost_min > 0.0 && o.edge_cost_min <= o.edge_cost_max && o.edge_cost_max < o.root_cost,
          "edge costs must be positive and below the root cost");
  Rng rng(seed);
  Scenario s;
  s.seed = seed;
  if (o.relevance) {
    require(static_cast<std::size_t>(o.relevance->rows()) == o.users &&
                static_cast<std::size_t>(o.relevance->cols()) == o.contents,
            "supplied relevance is not users x contents");
    s.users.relevance = *o.relevance;
  } else {
    s.users.relevance = synthetic_relevance(rng.next_u64(), o.users, o.contents, o.synthetic);
  }
  s.catalog.sizes.assign(o.contents, 1.0);
  s.catalog.popularity = relevance_popularity(s.users.relevance);
  s.users.alpha = draw_alpha(rng, o.users, o.alpha_min, o.alpha_max);
  s.users.rec_count.assign(o.users, o.rec_count);

  auto& topo = s.topology;
  const std::size_t caches = single_cache ? 1 : o.caches;
  const std::size_t reach = single_cache ? 1 : o.caches_per_user;
  topo.access.resize(o.users);
  topo.edge_cost.resize(o.users);
  topo.root_cost.assign(o.users, o.root_cost);
  std::vector<int> all(caches);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t u = 0; u < o.users; ++u) {
    auto pick = all;
    rng.shuffle(pick);
    std::vector<std::pair<double, int>> links;
    for (std::size_t k = 0; k < reach; ++k) links.emplace_back(rng.uniform(o.edge_cost_min, o.edge_cost_max), pick[k]);
    std::sort(links.begin(), links.end());
    for (const auto& [cost, j] : links) {
      topo.access[u].push_back(j);
      topo.edge_cost[u].push_back(cost);
    }
  }
  topo.capacities.resize(caches);
  for (auto& c : topo.capacities) {
    const double frac = rng.uniform(o.capacity_fraction_min, o.capacity_fraction_max);
    c = std::floor(frac * static_cast<double>(o.contents));
  }

  s.pricing.lambda = o.lambda;
  s.pricing.rho = o.rho;
  s.pricing.revenue_map = o.revenue_map;
  s.pricing.revenue = revenue_from(s.users.relevance, o.revenue_map);
  s.baseline.y_b = baseline_recommendations(s);
  s.baseline.x_b = Matrix::Zero(static_cast<Eigen::Index>(o.contents), static_cast<Eigen::Index>(caches));
  s.baseline.x_b = baseline_caching(s);
  validate(s);
  return s;
}

}  // namespace

RelevanceLoad load_relevance_csv(const std::filesystem::path& path, std::size_t expected_users,
                                 std::size_t expected_contents, const RatingScale& scale) {
  require(scale.max > scale.min, "rating scale must have max > min");
  require(expected_users > 0 && expected_contents > 0, "expected dimensions must be positive");
  std::ifstream in(path);
  if (!in) throw InputError("cannot open ratings file " + path.string());

  struct Row {
    long long user;
    long long content;
    double rating;
  };
  std::vector<Row> rows;
  std::set<long long> users, contents;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    Row row{};
    const bool ok = fields.size() >= 3 && parse_int(fields[0], row.user) && parse_int(fields[1], row.content) &&
                    parse_double(fields[2], row.rating);
    if (!ok) {
      if (line_no == 1 && rows.empty()) continue;  // header
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed rating row");
    }
    if (row.rating < scale.min || row.rating > scale.max) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": rating outside the declared scale");
    }
    rows.push_back(row);
    users.insert(row.user);
    contents.insert(row.content);
  }

  RelevanceLoad out;
  out.user_ids = smallest(users, expected_users, "user");
  out.content_ids = smallest(contents, expected_contents, "content");
  std::map<long long, Eigen::Index> user_row, content_col;
  for (std::size_t k = 0; k < out.user_ids.size(); ++k) user_row[out.user_ids[k]] = static_cast<Eigen::Index>(k);
  for (std::size_t k = 0; k < out.content_ids.size(); ++k)
    content_col[out.content_ids[k]] = static_cast<Eigen::Index>(k);

  const auto n_users = static_cast<Eigen::Index>(expected_users);
  const auto n_contents = static_cast<Eigen::Index>(expected_contents);
  Matrix value = Matrix::Zero(n_users, n_contents);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> seen =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Constant(n_users, n_contents, false);
  for (const auto& row : rows) {
    const auto ur = user_row.find(row.user);
    const auto cc = content_col.find(row.content);
    if (ur == user_row.end() || cc == content_col.end()) continue;
    if (seen(ur->second, cc->second)) {
      ++out.duplicates;
    } else {
      ++out.ratings_used;
    }
    seen(ur->second, cc->second) = true;
    value(ur->second, cc->second) = (row.rating - scale.min) / (scale.max - scale.min);
  }

  double global_sum = 0.0;
  std::size_t global_count = 0;
  std::vector<double> user_mean(expected_users, -1.0);
  for (Eigen::Index u = 0; u < n_users; ++u) {
    double sum = 0.0;
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < n_contents; ++i) {
      if (seen(u, i)) {
        sum += value(u, i);
        ++count;
      }
    }
    global_sum += sum;
    global_count += count;
    if (count > 0) user_mean[static_cast<std::size_t>(u)] = sum / static_cast<double>(count);
  }
  if (global_count == 0) throw InputError("ratings file has no rating inside the selected users and contents");
  const double global_mean = global_sum / static_cast<double>(global_count);
  for (Eigen::Index u = 0; u < n_users; ++u) {
    const double m = user_mean[static_cast<std::size_t>(u)];
    for (Eigen::Index i = 0; i < n_contents; ++i) {
      if (seen(u, i)) continue;
      if (m >= 0.0) {
        value(u, i) = m;
        ++out.imputed_by_user;
      } else {
        value(u, i) = global_mean;
        ++out.imputed_globally;
      }
    }
  }
  out.relevance = std::move(value);
  return out;
}

Matrix synthetic_relevance(std::uint64_t seed, std::size_t users, std::size_t contents,
                           const SyntheticRelevance& knobs) {
  require(knobs.rank >= 0, "latent rank must be nonnegative");
  Rng rng(seed);
  const auto k = static_cast<Eigen::Index>(knobs.rank);
  Matrix p(static_cast<Eigen::Index>(users), k);
  Matrix q(static_cast<Eigen::Index>(contents), k);
  Vector bu(static_cast<Eigen::Index>(users));
  Vector bi(static_cast<Eigen::Index>(contents));
  for (Eigen::Index u = 0; u < p.rows(); ++u) {
    bu[u] = knobs.user_spread * rng.normal();
    for (Eigen::Index f = 0; f < k; ++f) p(u, f) = knobs.factor_spread * rng.normal();
  }
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    bi[i] = knobs.item_spread * rng.normal();
    for (Eigen::Index f = 0; f < k; ++f) q(i, f) = rng.normal();
  }
  Matrix r = p * q.transpose();
  for (Eigen::Index u = 0; u < r.rows(); ++u)
    for (Eigen::Index i = 0; i < r.cols(); ++i) r(u, i) = logistic(knobs.mean + bu[u] + bi[i] + r(u, i));
  return r;
}

std::vector<double> relevance_popularity(const Matrix& relevance) {
  const Vector col = relevance.colwise().sum().transpose();
  const double total = col.sum();
  std::vector<double> p(static_cast<std::size_t>(col.size()));
  if (!(total > 0.0)) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    return p;
  }
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = col[static_cast<Eigen::Index>(i)] / total;
  return p;
}

Matrix baseline_recommendations(const Scenario& s) {
  const auto& revenue = s.pricing.revenue;
  Matrix y = Matrix::Zero(revenue.rows(), revenue.cols());
  for (Eigen::Index u = 0; u < revenue.rows(); ++u) {
    const auto n = static_cast<std::size_t>(s.users.rec_count[static_cast<std::size_t>(u)]);
    require(n <= static_cast<std::size_t>(revenue.cols()), "N_u exceeds the catalog size");
    for (int i : top_indices(std::span<const double>(revenue.row(u).data(), static_cast<std::size_t>(revenue.cols())), n))
      y(u, i) = 1.0;
  }
  return y;
}

Matrix baseline_caching(const Scenario& s) {
  const auto contents = s.content_count();
  const auto caches = s.cache_count();
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(contents), static_cast<Eigen::Index>(caches));
  for (std::size_t j = 0; j < caches; ++j) {
    std::vector<double> score(contents, 0.0);
    for (std::size_t u = 0; u < s.user_count(); ++u) {
      const auto& acc = s.topology.access[u];
      if (std::find(acc.begin(), acc.end(), static_cast<int>(j)) == acc.end()) continue;
      for (std::size_t i = 0; i < contents; ++i) score[i] += s.users.relevance(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i));
    }
    double left = s.topology.capacities[j];
    for (int i : top_indices(score, contents)) {
      const double size = s.catalog.sizes[static_cast<std::size_t>(i)];
      if (size <= left + 1e-12) {
        x(i, static_cast<Eigen::Index>(j)) = 1.0;
        left -= size;
      }
    }
  }
  return x;
}

Scenario generate_scenario_one(std::uint64_t seed, const ScenarioOptions& options) {
  return assemble(seed, options, false);
}

ScenarioOptions scenario_two_options() {
  ScenarioOptions o;
  o.caches = 1;
  o.caches_per_user = 1;
  o.capacity_fraction_min = 0.05;
  o.capacity_fraction_max = 0.05;
  return o;
}

Scenario generate_scenario_two(std::uint64_t seed, const ScenarioOptions& options) {
  return assemble(seed, options, true);
}

Scenario toy_scenario(double rho) {
  Scenario s;
  s.catalog.sizes = {1.0, 1.0, 1.0, 1.0};
  s.catalog.popularity = {0.25, 0.25, 0.25, 0.25};
  s.users.alpha = {1.0, 1.0};
  s.users.rec_count = {1, 1};
  s.users.relevance.resize(2, 4);
  s.users.relevance << 0.80, 0.20, 0.66, 0.56,
                       0.20, 0.80, 0.66, 0.56;
  s.topology.capacities = {2.0};
  s.topology.access = {{0}, {0}};
  s.topology.edge_cost = {{0.23}, {0.23}};
  s.topology.root_cost = {0.4, 0.4};
  s.pricing.lambda = 0.5;
  s.pricing.rho = rho;
  s.pricing.revenue_map = RevenueMap{RevenueMap::Kind::affine, 0.5, 0.5};
  s.pricing.revenue = revenue_from(s.users.relevance, s.pricing.revenue_map);
  s.baseline.y_b = baseline_recommendations(s);
  // Movies C and D cached from past popularity.
  s.baseline.x_b = Matrix::Zero(4, 1);
  s.baseline.x_b(2, 0) = 1.0;
  s.baseline.x_b(3, 0) = 1.0;
  validate(s);
  return s;
}

}  // namespace cooprec
