#pragma once

#include <vector>

#include "llrbc/net.hpp"
#include "llrbc/rng.hpp"

namespace llrbc {

enum class DecodeMode { sample, greedy };

struct Trajectory {
  int start_node = 0;
  std::vector<int> actions;  // decided actions; excludes the TSP start, the forced
                             // first CVRP customer, and the automatic depot return
  std::vector<double> logp;  // log-probability of each decided action
  std::vector<int> route;    // the complete route
  double total_length = 0;
  double reward() const { return -total_length; }
};

// One multi-start batch: trajectories are instance-major, starts-per-instance rows.
// CVRP trajectories finish at different steps; finished rows keep padding along with a
// depot-only mask so every decode step covers the same row set (padded rows carry no
// probability mass into any loss).
struct RolloutResult {
  std::vector<const Instance*> instances;
  int starts = 0;
  Encode enc;
  std::vector<StepAct> steps;
  std::vector<std::vector<std::uint8_t>> active;  // [step][row]: real decision?
  std::vector<Trajectory> trajectories;           // instances.size() * starts
};

// mode=sample draws actions through rng (one uniform per row per step, padded rows
// included, so stream consumption is shape-stable); greedy takes the lowest-index
// argmax. record=true keeps activations for Net::backward.
RolloutResult rollout(const Policy& p, const std::vector<const Instance*>& instances,
                      DecodeMode mode, int starts, Rng* rng, bool record);

// Re-runs the decode with the given action sequences under the current parameters.
// This makes losses pure functions of theta for fixed trajectories.
RolloutResult replay_rollout(const Policy& p, const std::vector<const Instance*>& instances,
                             const std::vector<Trajectory>& trajectories, int starts,
                             bool record);

struct EvalRoute {
  double length = 0;
  std::vector<int> route;
};

// Greedy decode from every start node (or `starts` of them), best route kept.
EvalRoute best_greedy_route(const Policy& p, const Instance& inst, int starts = 0);

// Batched greedy evaluation over a frozen test set; returns best-of-starts lengths.
std::vector<double> evaluate_lengths(const Policy& p, const std::vector<Instance>& set,
                                     int starts = 0);

}  // namespace llrbc
