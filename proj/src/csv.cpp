#include "rotperm/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rotperm/errors.hpp"

namespace rotperm {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

RotatingPanelSample parse_csv(std::istream& in, const std::string& name) {
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line))
    throw ParseError(name + ": empty file");
  ++line_no;
  {
    auto header = split_fields(line);
    const std::vector<std::string> expected = {"occasion", "cluster_id",
                                               "unit", "value"};
    if (std::vector<std::string>(header.begin(), header.end()) != expected)
      throw ParseError(name + " line 1: header must be "
                       "'occasion,cluster_id,unit,value'");
  }

  // (occasion, cluster) -> unit -> value
  std::map<std::pair<int, int>, std::map<int, double>> cells;
  // first-appearance membership order per occasion
  std::map<int, std::vector<int>> order;
  int max_occasion = -1;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto fields = split_fields(stripped);
    const std::string where = name + " line " + std::to_string(line_no);
    if (fields.size() != 4)
      throw ParseError(where + ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    int occ, cluster, unit;
    double value;
    try {
      size_t used;
      occ = std::stoi(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("");
      cluster = std::stoi(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("");
      unit = std::stoi(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("");
      value = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ParseError(where + ": malformed field");
    }
    if (occ < 0) throw ParseError(where + ": occasion must be >= 0");
    auto& unit_map = cells[{occ, cluster}];
    if (unit_map.empty()) order[occ].push_back(cluster);
    if (!unit_map.emplace(unit, value).second)
      throw ParseError(where + ": duplicate (occasion, cluster, unit) = (" +
                       std::to_string(occ) + ", " + std::to_string(cluster) +
                       ", " + std::to_string(unit) + ")");
    max_occasion = std::max(max_occasion, occ);
  }
  if (max_occasion < 0) throw ParseError(name + ": no data rows");

  int cluster_size = -1;
  std::pair<int, int> first_cell;
  for (const auto& [key, unit_map] : cells) {
    if (cluster_size < 0) {
      cluster_size = int(unit_map.size());
      first_cell = key;
    } else if (int(unit_map.size()) != cluster_size) {
      throw ParseError(
          name + ": inconsistent cluster size: (occasion " +
          std::to_string(key.first) + ", cluster " +
          std::to_string(key.second) + ") has " +
          std::to_string(unit_map.size()) + " units, (occasion " +
          std::to_string(first_cell.first) + ", cluster " +
          std::to_string(first_cell.second) + ") has " +
          std::to_string(cluster_size));
    }
  }

  std::vector<std::vector<int>> membership(max_occasion + 1);
  for (auto& [occ, ids] : order) membership[occ] = std::move(ids);

  PlanConfig plan;
  plan.num_occasions = max_occasion + 1;
  plan.cluster_size = cluster_size;
  plan.clusters_per_occasion = int(membership[0].size());
  int overlap01 = 0;
  if (membership.size() > 1) {
    std::set<int> s0(membership[0].begin(), membership[0].end());
    for (int id : membership[1]) overlap01 += s0.count(id);
  }
  plan.replaced_per_occasion = plan.clusters_per_occasion - overlap01;
  if (plan.replaced_per_occasion > 0 &&
      plan.clusters_per_occasion % plan.replaced_per_occasion == 0)
    plan.full_rotation =
        plan.clusters_per_occasion / plan.replaced_per_occasion;

  std::vector<ClusterObservation> observations;
  observations.reserve(cells.size());
  for (auto& [key, unit_map] : cells) {
    ClusterObservation obs;
    obs.occasion = key.first;
    obs.cluster_id = key.second;
    obs.values.reserve(unit_map.size());
    for (const auto& [unit, value] : unit_map) obs.values.push_back(value);
    observations.push_back(std::move(obs));
  }
  return RotatingPanelSample(plan, std::move(membership),
                             std::move(observations));
}

RotatingPanelSample parse_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_csv(in, path);
}

RotatingPanelSample ingest_csv(const std::string& path) {
  RotatingPanelSample sample = parse_csv_file(path);
  const auto violations = validate(sample);
  if (!violations.empty()) {
    std::string msg = path + ": dataset fails validation:";
    for (const auto& v : violations) msg += "\n  [" + v.code + "] " + v.message;
    throw ParseError(msg);
  }
  return sample;
}

void emit_csv(const RotatingPanelSample& sample, std::ostream& out) {
  out << "occasion,cluster_id,unit,value\n";
  char buf[64];
  for (int k = 0; k < sample.num_occasions(); ++k) {
    for (int id : sample.members(k)) {
      if (!sample.has_observation(k, id)) continue;
      const auto vals = sample.values(k, id);
      for (size_t u = 0; u < vals.size(); ++u) {
        std::snprintf(buf, sizeof buf, "%.17g", vals[u]);
        out << k << ',' << id << ',' << (u + 1) << ',' << buf << '\n';
      }
    }
  }
}

void emit_csv_file(const RotatingPanelSample& sample,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  emit_csv(sample, out);
}

std::optional<std::string> overlap_warning(const RotatingPanelSample& sample) {
  if (sample.num_occasions() < 2) return std::nullopt;
  const auto overlap = overlap_sets(sample, 0, 1);
  if (!overlap.both.empty()) return std::nullopt;
  return "occasions 0 and 1 share no clusters: the swap step has nothing to "
         "permute and the test reduces to reassigning rotation-only clusters";
}

std::vector<double> load_population(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open population file " + path);
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    try {
      size_t used;
      const double v = std::stod(stripped, &used);
      if (used != stripped.size()) throw std::invalid_argument("");
      values.push_back(v);
    } catch (const std::exception&) {
      throw ParseError(path + " line " + std::to_string(line_no) +
                       ": malformed value");
    }
  }
  if (values.empty()) throw ParseError(path + ": empty population");
  return values;
}

}  // namespace rotperm
