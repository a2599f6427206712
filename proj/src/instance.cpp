#include "llrbc/instance.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace llrbc {

using nlohmann::json;

void Instance::validate() const {
  if (n() < 2) throw config_error("instance needs at least 2 nodes, got " + std::to_string(n()));
  if ((coords.array() < -1e-12).any() || (coords.array() > 1.0 + 1e-12).any()) {
    throw config_error("instance coordinates fall outside the unit square");
  }
  if (kind == ProblemKind::tsp) {
    if (demands.size() != 0 || capacity != 0) {
      throw config_error("tsp instance carries cvrp fields");
    }
    return;
  }
  if (capacity <= 0) throw config_error("cvrp instance needs positive capacity");
  if (demands.size() != n()) {
    throw config_error("cvrp demand count " + std::to_string(demands.size()) +
                       " does not match node count " + std::to_string(n()));
  }
  if ((depot.array() < -1e-12).any() || (depot.array() > 1.0 + 1e-12).any()) {
    throw config_error("cvrp depot falls outside the unit square");
  }
  if ((demands.array() < 0).any()) throw config_error("negative demand");
  if (demands.maxCoeff() <= 0) throw config_error("all demands are zero");
  if ((demands.array() > capacity).any()) {
    throw config_error("a demand exceeds vehicle capacity; instance is unservable");
  }
}

namespace {

double edge(const Eigen::RowVector2d& a, const Eigen::RowVector2d& b,
            LengthConvention convention) {
  double d = (a - b).norm();
  if (convention == LengthConvention::tsplib_nint) {
    return std::floor(d + 0.5);
  }
  return d;
}

}  // namespace

double tour_length(const Instance& inst, const std::vector<int>& route,
                   LengthConvention convention) {
  const bool raw = convention == LengthConvention::tsplib_nint && inst.has_raw;
  const Eigen::MatrixX2d& pts = raw ? inst.raw_coords : inst.coords;
  const Eigen::RowVector2d depot = raw ? inst.raw_depot : inst.depot;
  const int n = inst.n();

  std::vector<int> visits(n, 0);
  for (int idx : route) {
    if (idx < 0 || idx > inst.action_count() - 1) {
      throw data_error("route index " + std::to_string(idx) + " out of range");
    }
    if (idx < n) visits[idx]++;
  }
  for (int i = 0; i < n; ++i) {
    if (visits[i] != 1) {
      throw data_error("route visits customer " + std::to_string(i) + " " +
                       std::to_string(visits[i]) + " times");
    }
  }

  auto point = [&](int idx) -> Eigen::RowVector2d {
    return idx == inst.depot_index() ? depot : Eigen::RowVector2d(pts.row(idx));
  };

  double total = 0;
  if (inst.kind == ProblemKind::tsp) {
    for (size_t i = 0; i < route.size(); ++i) {
      total += edge(point(route[i]), point(route[(i + 1) % route.size()]), convention);
    }
    return total;
  }
  if (route.back() != inst.depot_index()) {
    throw data_error("cvrp route must end at the depot");
  }
  Eigen::RowVector2d cur = depot;
  for (int idx : route) {
    Eigen::RowVector2d next = point(idx);
    total += edge(cur, next, convention);
    cur = next;
  }
  return total;
}

namespace {

json coords_to_json(const Eigen::MatrixX2d& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back({m(i, 0), m(i, 1)});
  return a;
}

Eigen::MatrixX2d coords_from_json(const json& a, const char* field) {
  if (!a.is_array() || a.empty()) throw config_error(std::string(field) + " must be a non-empty array");
  Eigen::MatrixX2d m(a.size(), 2);
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_array() || a[i].size() != 2) {
      throw config_error(std::string(field) + "[" + std::to_string(i) + "] must be an [x, y] pair");
    }
    m(static_cast<Eigen::Index>(i), 0) = a[i][0].get<double>();
    m(static_cast<Eigen::Index>(i), 1) = a[i][1].get<double>();
  }
  return m;
}

}  // namespace

std::string instance_to_json(const Instance& inst) {
  json j;
  j["kind"] = to_string(inst.kind);
  j["coords"] = coords_to_json(inst.coords);
  if (inst.kind == ProblemKind::cvrp) {
    j["depot"] = {inst.depot(0), inst.depot(1)};
    j["demands"] = std::vector<double>(inst.demands.begin(), inst.demands.end());
    j["capacity"] = inst.capacity;
  }
  j["source"] = inst.source;
  if (inst.has_raw) {
    j["raw_coords"] = coords_to_json(inst.raw_coords);
    if (inst.kind == ProblemKind::cvrp) j["raw_depot"] = {inst.raw_depot(0), inst.raw_depot(1)};
  }
  return j.dump();
}

Instance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("bad instance json: ") + e.what());
  }
  Instance inst;
  try {
    inst.kind = problem_kind_from_string(j.at("kind").get<std::string>());
    inst.coords = coords_from_json(j.at("coords"), "coords");
    if (inst.kind == ProblemKind::cvrp) {
      const auto& d = j.at("depot");
      inst.depot = Eigen::RowVector2d(d.at(0).get<double>(), d.at(1).get<double>());
      auto dem = j.at("demands").get<std::vector<double>>();
      inst.demands = Eigen::Map<Eigen::VectorXd>(dem.data(), dem.size());
      inst.capacity = j.at("capacity").get<double>();
    }
    inst.source = j.value("source", "");
    if (j.contains("raw_coords")) {
      inst.raw_coords = coords_from_json(j["raw_coords"], "raw_coords");
      if (j.contains("raw_depot")) {
        inst.raw_depot = Eigen::RowVector2d(j["raw_depot"].at(0).get<double>(),
                                            j["raw_depot"].at(1).get<double>());
      }
      inst.has_raw = true;
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("bad instance json: ") + e.what());
  }
  inst.validate();
  return inst;
}

void write_instances(const std::string& path, const std::vector<Instance>& instances) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open " + path + " for writing");
  for (const auto& inst : instances) out << instance_to_json(inst) << "\n";
}

std::vector<Instance> read_instances(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  std::vector<Instance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(instance_from_json(line));
  }
  if (out.empty()) throw data_error(path + " holds no instances");
  return out;
}

}  // namespace llrbc
