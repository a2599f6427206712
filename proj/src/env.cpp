#include "llrbc/env.hpp"

namespace llrbc {

ConstructionState reset(const Instance& inst, int start_node) {
  if (start_node < 0 || start_node >= inst.n()) {
    throw data_error("start node " + std::to_string(start_node) + " out of range");
  }
  ConstructionState s;
  s.instance = &inst;
  s.visited.assign(inst.n(), 0);
  if (inst.kind == ProblemKind::tsp) {
    s.route.push_back(start_node);
    s.visited[start_node] = 1;
    s.visited_count = 1;
    s.current = start_node;
  } else {
    s.current = inst.depot_index();
    s.remaining = inst.capacity;
  }
  return s;
}

std::vector<std::uint8_t> feasible_actions(const ConstructionState& state) {
  const Instance& inst = *state.instance;
  if (state.terminal()) throw data_error("feasible_actions called on a terminal state");
  std::vector<std::uint8_t> mask(inst.action_count(), 0);
  if (inst.kind == ProblemKind::tsp) {
    for (int i = 0; i < inst.n(); ++i) mask[i] = !state.visited[i];
    return mask;
  }
  for (int i = 0; i < inst.n(); ++i) {
    mask[i] = !state.visited[i] && inst.demands(i) <= state.remaining + 1e-9;
  }
  if (state.current != inst.depot_index()) mask[inst.depot_index()] = 1;
  return mask;
}

ConstructionState step(const ConstructionState& state, int action) {
  const Instance& inst = *state.instance;
  auto mask = feasible_actions(state);
  if (action < 0 || action >= static_cast<int>(mask.size()) || !mask[action]) {
    throw data_error("infeasible action " + std::to_string(action) +
                     "; the caller's mask is broken");
  }
  ConstructionState s = state;
  s.route.push_back(action);
  if (action == inst.depot_index()) {
    s.current = action;
    s.remaining = inst.capacity;
    return s;
  }
  s.visited[action] = 1;
  s.visited_count++;
  s.current = action;
  if (inst.kind == ProblemKind::cvrp) {
    s.remaining -= inst.demands(action);
    if (s.terminal()) {
      s.route.push_back(inst.depot_index());
      s.current = inst.depot_index();
      s.remaining = inst.capacity;
    }
  }
  return s;
}

bool route_is_feasible(const Instance& inst, const std::vector<int>& route) {
  std::vector<int> visits(inst.n(), 0);
  double remaining = inst.capacity;
  int current = inst.depot_index();
  for (int idx : route) {
    if (idx < 0 || idx >= inst.action_count()) return false;
    if (inst.kind == ProblemKind::cvrp) {
      if (idx == inst.depot_index()) {
        if (current == inst.depot_index()) return false;
        remaining = inst.capacity;
      } else {
        remaining -= inst.demands(idx);
        if (remaining < -1e-9) return false;
        visits[idx]++;
      }
      current = idx;
    } else {
      visits[idx]++;
    }
  }
  for (int i = 0; i < inst.n(); ++i) {
    if (visits[i] != 1) return false;
  }
  if (inst.kind == ProblemKind::cvrp && current != inst.depot_index()) return false;
  return true;
}

}  // namespace llrbc
