#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "llrbc/losses.hpp"
#include "llrbc/tasks.hpp"

namespace llrbc {

enum class Method { llr_bc, finetune, restart, ewc };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

// Per-task training knobs after profile defaults and overrides are folded in.
// Per-scale tables are keyed by the resolved task scale.
struct TrainingParams {
  int epochs_per_task = 0;
  std::map<int, int> instances_per_epoch;
  std::map<int, int> batch_size;
  int buffer_capacity = 0;  // experience batches the reservoir can hold
  int sample_count = 0;     // batches drawn per consolidation step
  double alpha = 100.0;
  DivergenceMode divergence = DivergenceMode::reverse_kld;
  bool uniform_weights = false;   // ablation: drop confidence weighting
  bool buffer_all_epochs = false; // task-free variant: offer every epoch's batches
  double lr = 1e-4;
  double lambda = 10.0;           // consolidation weight of the EWC baseline
  int fisher_instances = 0;
  int test_instances = 0;
  int experience_max_instances = 0;    // 0 = keep every instance of a batch
  int experience_max_trajectories = 0; // 0 = keep every trajectory per instance
  int curve_eval_every = 0;            // batches between curve probes, 0 = off
  int curve_eval_instances = 50;
};

struct RunConfig {
  std::string profile = "desk";  // desk | paper
  ProblemKind kind = ProblemKind::tsp;
  int preset = 1;                       // order preset 1..5, used when tasks is empty
  std::vector<Distribution> tasks;      // explicit order, overrides preset
  int force_scale = 0;                  // 0 = per-distribution profile scale
  std::vector<Method> methods{Method::llr_bc};
  std::uint64_t seed = 1;
  std::string out_dir;                  // empty = derived from the output root
  TrainingParams train;

  void validate() const;

  // Task order with resolved scales, capacities, and frozen test-set seeds.
  std::vector<TaskSpec> order() const;

  int batches_per_epoch(int scale) const;

  // Canonical JSON of every semantic field (sorted keys, no whitespace variance).
  std::string canonical_json() const;
  std::uint64_t config_hash() const;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
};

}  // namespace llrbc
