#include <fstream>
#include <sstream>

#include "cooprec/errors.hpp"
#include "cooprec/scenario.hpp"
#include "json.hpp"

namespace cooprec {

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from(const json& j, const char* name) {
  if (!j.is_array()) throw InputError(std::string("field '") + name + "' must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InputError(std::string("field '") + name + "' is not rectangular");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

const json& field(const json& j, const char* name) {
  if (!j.contains(name)) throw InputError(std::string("scenario file is missing field '") + name + "'");
  return j.at(name);
}

json to_document(const Scenario& s) {
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["seed"] = s.seed;
  j["catalog"] = {{"sizes", s.catalog.sizes}, {"popularity", s.catalog.popularity}};
  j["users"] = {{"alpha", s.users.alpha},
                {"rec_count", s.users.rec_count},
                {"relevance", matrix_json(s.users.relevance)}};
  j["topology"] = {{"capacities", s.topology.capacities},
                   {"access", s.topology.access},
                   {"edge_cost", s.topology.edge_cost},
                   {"root_cost", s.topology.root_cost}};
  j["pricing"] = {{"lambda", s.pricing.lambda},
                  {"rho", s.pricing.rho},
                  {"revenue", matrix_json(s.pricing.revenue)},
                  {"revenue_map",
                   {{"kind", s.pricing.revenue_map.name()},
                    {"intercept", s.pricing.revenue_map.intercept},
                    {"slope", s.pricing.revenue_map.slope}}}};
  j["baseline"] = {{"y_b", matrix_json(s.baseline.y_b)}, {"x_b", matrix_json(s.baseline.x_b)}};
  return j;
}

}  // namespace

std::string scenario_to_json(const Scenario& scenario) { return to_document(scenario).dump(); }

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("scenario file is not valid JSON: ") + e.what());
  }
  try {
    const int version = field(j, "schema_version").get<int>();
    if (version != kScenarioSchemaVersion)
      throw InputError("unsupported scenario schema version " + std::to_string(version));
    Scenario s;
    s.seed = field(j, "seed").get<std::uint64_t>();
    const auto& cat = field(j, "catalog");
    s.catalog.sizes = field(cat, "sizes").get<std::vector<double>>();
    s.catalog.popularity = field(cat, "popularity").get<std::vector<double>>();
    const auto& users = field(j, "users");
    s.users.alpha = field(users, "alpha").get<std::vector<double>>();
    s.users.rec_count = field(users, "rec_count").get<std::vector<int>>();
    s.users.relevance = matrix_from(field(users, "relevance"), "relevance");
    const auto& topo = field(j, "topology");
    s.topology.capacities = field(topo, "capacities").get<std::vector<double>>();
    s.topology.access = field(topo, "access").get<std::vector<std::vector<int>>>();
    s.topology.edge_cost = field(topo, "edge_cost").get<std::vector<std::vector<double>>>();
    s.topology.root_cost = field(topo, "root_cost").get<std::vector<double>>();
    const auto& pricing = field(j, "pricing");
    s.pricing.lambda = field(pricing, "lambda").get<double>();
    s.pricing.rho = field(pricing, "rho").get<double>();
    s.pricing.revenue = matrix_from(field(pricing, "revenue"), "revenue");
    const auto& map = field(pricing, "revenue_map");
    const auto kind = field(map, "kind").get<std::string>();
    if (kind == "affine") {
      s.pricing.revenue_map.kind = RevenueMap::Kind::affine;
    } else if (kind == "sqrt") {
      s.pricing.revenue_map.kind = RevenueMap::Kind::sqrt;
    } else {
      throw InputError("unknown revenue map kind '" + kind + "'");
    }
    s.pricing.revenue_map.intercept = field(map, "intercept").get<double>();
    s.pricing.revenue_map.slope = field(map, "slope").get<double>();
    const auto& base = field(j, "baseline");
    s.baseline.y_b = matrix_from(field(base, "y_b"), "y_b");
    s.baseline.x_b = matrix_from(field(base, "x_b"), "x_b");
    // An empty catalog dimension loses the column count of x_b.
    if (s.baseline.x_b.rows() == 0) s.baseline.x_b.resize(0, static_cast<Eigen::Index>(s.topology.capacities.size()));
    try {
      validate(s);
    } catch (const ContractViolation& e) {
      throw InputError(std::string("scenario file violates an invariant: ") + e.what());
    }
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("scenario file has a field of the wrong type: ") + e.what());
  }
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write scenario file " + path.string());
  out << scenario_to_json(scenario) << '\n';
  if (!out) throw InputError("failed writing scenario file " + path.string());
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open scenario file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return scenario_from_json(buffer.str());
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k) {
    out[static_cast<std::size_t>(k)] = kDigits[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::string scenario_hash(const Scenario& scenario) { return fnv1a_hex(scenario_to_json(scenario)); }

}  // namespace cooprec
