#include "moflp/instance_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include <json.hpp>

#include "moflp/errors.hpp"
#include "moflp/rng.hpp"

namespace moflp {

using json = nlohmann::ordered_json;

namespace {

void check_range(const Range& r, const char* name) {
  if (!(r.lo > 0.0) || !(r.lo <= r.hi)) {
    throw ConfigError(std::string(name) + " range requires 0 < lo <= hi (got [" +
                      std::to_string(r.lo) + ", " + std::to_string(r.hi) + "])");
  }
}

double euclidean(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

void GenConfig::validate() const {
  if (m < 1 || n < 1) throw ConfigError("generator requires m >= 1 and n >= 1");
  check_range(fixed_cost, "fixed_cost");
  check_range(demand, "demand");
  check_range(timescale, "timescale");
  check_range(unit_cost, "unit_cost");
  if (!(velocity.mean > 0.0) || !(velocity.stddev > 0.0))
    throw ConfigError("velocity model requires positive mean and deviation");
}

std::string instance_id(int m, int n, std::uint64_t seed) {
  char idbuf[64];
  std::snprintf(idbuf, sizeof(idbuf), "m%dn%d-%016llx", m, n,
                static_cast<unsigned long long>(seed));
  return idbuf;
}

Instance generate_instance(const GenConfig& config) {
  config.validate();
  Rng rng(config.seed);

  Instance inst;
  inst.m = config.m;
  inst.n = config.n;
  inst.id = instance_id(config.m, config.n, config.seed);

  // Fixed draw order: coordinates, then scalar fields, then the cost matrix.
  inst.coords_facility.resize(config.m);
  for (auto& p : inst.coords_facility) p = {rng.uniform(), rng.uniform()};
  inst.coords_customer.resize(config.n);
  for (auto& p : inst.coords_customer) p = {rng.uniform(), rng.uniform()};

  inst.fixed_cost.resize(config.m);
  for (auto& v : inst.fixed_cost) v = rng.uniform(config.fixed_cost.lo, config.fixed_cost.hi);
  inst.demand.resize(config.n);
  for (auto& v : inst.demand) v = rng.uniform(config.demand.lo, config.demand.hi);
  inst.timescale.resize(config.n);
  for (auto& v : inst.timescale) v = rng.uniform(config.timescale.lo, config.timescale.hi);

  const std::size_t mn = static_cast<std::size_t>(config.m) * config.n;
  inst.unit_cost.resize(mn);
  for (auto& v : inst.unit_cost) v = rng.uniform(config.unit_cost.lo, config.unit_cost.hi);

  inst.distance.resize(mn);
  for (int i = 0; i < config.m; ++i)
    for (int j = 0; j < config.n; ++j)
      inst.distance[inst.idx(i, j)] = euclidean(inst.coords_facility[i], inst.coords_customer[j]);

  inst.reliability = pair_reliability(inst.distance, config.m, config.n, inst.timescale,
                                      config.velocity);
  inst.validate();
  return inst;
}

std::vector<ObjectivePoint> ParetoSet::objective_points() const {
  std::vector<ObjectivePoint> pts;
  pts.reserve(solutions.size());
  for (const auto& s : solutions) pts.push_back(objective_point(s));
  return pts;
}

void ParetoSet::validate() const {
  if (solutions.empty()) throw ValidationError("Pareto set must be non-empty");
  const auto pts = objective_points();
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = 0; b < pts.size(); ++b) {
      if (a != b && dominates(pts[a], pts[b])) {
        throw ValidationError("Pareto set member " + std::to_string(a) +
                              " dominates member " + std::to_string(b));
      }
    }
  }
}

ParetoSet brute_force_pareto(const Instance& inst) {
  if (inst.m > 12) {
    throw DomainError("brute_force_pareto is guarded to m <= 12 (got m=" +
                      std::to_string(inst.m) + ")");
  }

  std::vector<Solution> candidates;
  candidates.reserve((1u << inst.m) - 1);
  for (std::uint32_t mask = 1; mask < (1u << inst.m); ++mask) {
    Solution sol;
    sol.open.resize(inst.m);
    for (int i = 0; i < inst.m; ++i) sol.open[i] = (mask >> i) & 1u;
    sol.assign = optimal_assignment(inst, sol.open);
    evaluate(inst, sol);
    candidates.push_back(std::move(sol));
  }

  // Keep the maximal non-dominated subset; identical objective points keep the
  // first (lowest-mask) candidate.
  ParetoSet front;
  front.instance_id = inst.id;
  for (std::size_t a = 0; a < candidates.size(); ++a) {
    const auto pa = objective_point(candidates[a]);
    bool keep = true;
    for (std::size_t b = 0; b < candidates.size() && keep; ++b) {
      if (b == a) continue;
      const auto pb = objective_point(candidates[b]);
      if (dominates(pb, pa)) keep = false;
      if (pb == pa && b < a) keep = false;
    }
    if (keep) front.solutions.push_back(candidates[a]);
  }
  return front;
}

namespace {

const json& field(const json& doc, const char* key, const char* meaning) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw ParseError(std::string("missing field '") + key + "' (" + meaning + ")");
  }
  return *it;
}

template <typename T>
T field_as(const json& doc, const char* key, const char* meaning) {
  try {
    return field(doc, key, meaning).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field '") + key + "' (" + meaning + "): " + e.what());
  }
}

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed ") + what + " document: " + e.what());
  }
}

json coords_to_json(const std::vector<std::array<double, 2>>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back(json::array({p[0], p[1]}));
  return arr;
}

std::vector<std::array<double, 2>> coords_from_json(const json& arr, const char* key) {
  std::vector<std::array<double, 2>> out;
  out.reserve(arr.size());
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2) {
      throw ParseError(std::string("field '") + key + "': each point must be [x, y]");
    }
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

constexpr int kInstanceSchema = 1;
constexpr int kParetoSchema = 1;

}  // namespace

std::string encode_instance(const Instance& inst) {
  json doc;
  doc["schema"] = kInstanceSchema;
  doc["kind"] = "instance";
  doc["id"] = inst.id;
  doc["m"] = inst.m;
  doc["n"] = inst.n;
  doc["f"] = inst.fixed_cost;
  doc["q"] = inst.demand;
  doc["t"] = inst.timescale;
  doc["coords"] = json{{"facility", coords_to_json(inst.coords_facility)},
                       {"customer", coords_to_json(inst.coords_customer)}};
  doc["d"] = inst.distance;
  doc["c"] = inst.unit_cost;
  doc["R"] = inst.reliability;
  return doc.dump(1) + "\n";
}

Instance decode_instance(const std::string& text) {
  const json doc = parse(text, "instance");
  const int schema = field_as<int>(doc, "schema", "schema version");
  if (schema != kInstanceSchema) {
    throw ParseError("unsupported instance schema version " + std::to_string(schema));
  }

  Instance inst;
  inst.id = field_as<std::string>(doc, "id", "instance identifier");
  inst.m = field_as<int>(doc, "m", "facility count");
  inst.n = field_as<int>(doc, "n", "customer count");
  inst.fixed_cost = field_as<std::vector<double>>(doc, "f", "fixed cost");
  inst.demand = field_as<std::vector<double>>(doc, "q", "demand");
  inst.timescale = field_as<std::vector<double>>(doc, "t", "timescale");
  const json& coords = field(doc, "coords", "coordinates");
  inst.coords_facility = coords_from_json(field(coords, "facility", "facility coordinates"),
                                          "coords.facility");
  inst.coords_customer = coords_from_json(field(coords, "customer", "customer coordinates"),
                                          "coords.customer");
  inst.distance = field_as<std::vector<double>>(doc, "d", "distance matrix");
  inst.unit_cost = field_as<std::vector<double>>(doc, "c", "unit transport cost matrix");
  inst.reliability = field_as<std::vector<double>>(doc, "R", "pair reliability matrix");
  inst.validate();
  return inst;
}

std::string encode_pareto(const ParetoSet& ps) {
  json doc;
  doc["schema"] = kParetoSchema;
  doc["kind"] = "pareto_set";
  doc["instance_id"] = ps.instance_id;
  json sols = json::array();
  for (const auto& s : ps.solutions) {
    json entry;
    entry["open"] = s.open;
    entry["assign"] = s.assign;
    entry["f1"] = s.cost ? json(*s.cost) : json();
    entry["f2"] = s.reliability ? json(*s.reliability) : json();
    sols.push_back(std::move(entry));
  }
  doc["solutions"] = std::move(sols);
  return doc.dump(1) + "\n";
}

ParetoSet decode_pareto(const std::string& text) {
  const json doc = parse(text, "pareto_set");
  const int schema = field_as<int>(doc, "schema", "schema version");
  if (schema != kParetoSchema) {
    throw ParseError("unsupported pareto_set schema version " + std::to_string(schema));
  }

  ParetoSet ps;
  ps.instance_id = field_as<std::string>(doc, "instance_id", "instance identifier");
  const json& sols = field(doc, "solutions", "solution list");
  for (const auto& entry : sols) {
    Solution s;
    s.open = field_as<std::vector<std::uint8_t>>(entry, "open", "open bits");
    s.assign = field_as<std::vector<int>>(entry, "assign", "assignment vector");
    if (!field(entry, "f1", "total cost").is_null()) s.cost = entry["f1"].get<double>();
    if (!field(entry, "f2", "system reliability").is_null())
      s.reliability = entry["f2"].get<double>();
    ps.solutions.push_back(std::move(s));
  }
  return ps;
}

}  // namespace moflp
