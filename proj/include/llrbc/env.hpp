#pragma once

#include <Eigen/Dense>
#include <vector>

#include "llrbc/instance.hpp"

namespace llrbc {

// Masked action distribution over the instance's action space (TSP: n cities,
// CVRP: n customers + depot at index n). Masked entries are exactly zero.
struct Behavior {
  Eigen::VectorXd probs;
  std::vector<std::uint8_t> mask;
};

struct ConstructionState {
  const Instance* instance = nullptr;
  std::vector<int> route;
  std::vector<std::uint8_t> visited;  // customers only, length n
  int current = 0;                    // token index; CVRP depot = n
  double remaining = 0;               // CVRP remaining capacity
  int visited_count = 0;

  bool terminal() const { return visited_count == static_cast<int>(visited.size()); }
};

// TSP: start_node is the first visited city. CVRP: the vehicle sits at the depot and
// start_node only records the designated first customer, applied by the rollout as a
// forced move.
ConstructionState reset(const Instance& inst, int start_node);

// Mask over the action space. TSP: unvisited cities. CVRP: unvisited customers whose
// demand fits the remaining capacity, plus the depot unless already there. Never
// all-false on a non-terminal state.
std::vector<std::uint8_t> feasible_actions(const ConstructionState& state);

// Applies one action. Visiting the last CVRP customer appends the final depot return,
// so the resulting state is terminal without a trailing decision.
ConstructionState step(const ConstructionState& state, int action);

// Route validity beyond what tour_length checks: visit counts and capacity.
bool route_is_feasible(const Instance& inst, const std::vector<int>& route);

}  // namespace llrbc
