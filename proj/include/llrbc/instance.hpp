#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "llrbc/common.hpp"

namespace llrbc {

// One routing problem. Coordinates are always normalized to the unit square for the
// policy; benchmark instances additionally retain raw file coordinates so lengths can
// be reported in the benchmark's own convention.
struct Instance {
  ProblemKind kind = ProblemKind::tsp;
  Eigen::MatrixX2d coords;       // n x 2 customer (TSP: city) positions in [0,1]^2
  Eigen::RowVector2d depot{0, 0};  // CVRP only
  Eigen::VectorXd demands;       // CVRP only, n entries
  double capacity = 0;           // CVRP only
  std::string source;            // "generated:<distribution>" or "benchmark:<name>"
  Eigen::MatrixX2d raw_coords;   // benchmark instances only
  Eigen::RowVector2d raw_depot{0, 0};
  bool has_raw = false;

  int n() const { return static_cast<int>(coords.rows()); }
  // CVRP exposes the depot as one extra action with index n.
  int action_count() const { return kind == ProblemKind::cvrp ? n() + 1 : n(); }
  int depot_index() const { return n(); }

  void validate() const;  // throws config_error on broken invariants
};

enum class LengthConvention { euclidean, tsplib_nint };

// Route for TSP: a permutation of 0..n-1, the closing edge added implicitly.
// Route for CVRP: customer/depot indices in visit order, starting implicitly at the
// depot and ending with an explicit depot return (depot index = n).
// Throws data_error if the route does not visit every customer exactly once.
double tour_length(const Instance& inst, const std::vector<int>& route,
                   LengthConvention convention = LengthConvention::euclidean);

std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);

// JSON-lines helpers for frozen test sets.
void write_instances(const std::string& path, const std::vector<Instance>& instances);
std::vector<Instance> read_instances(const std::string& path);

}  // namespace llrbc
