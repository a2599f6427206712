#pragma once

#include <string>
#include <vector>

#include "llrbc/policy.hpp"
#include "llrbc/tasks.hpp"

namespace llrbc {

struct BenchmarkResult {
  std::string name;
  int n = 0;
  double raw_length = 0;         // benchmark convention (nearest-integer distances)
  double normalized_length = 0;  // unit-square Euclidean
  double gap = 0;                // vs the best checkpoint in the same evaluation
};

// Library files in the directory (.tsp / .vrp), name-sorted. Instances whose node
// count exceeds max_scale, whose kind differs from the checkpoint's, or which fail to
// parse are skipped with a warning line.
std::vector<Instance> load_benchmark_dir(const std::string& dir, ProblemKind kind,
                                         int max_scale, std::vector<std::string>& warnings);

// Best-of-all-starts greedy evaluation of one checkpoint; gaps are zero until
// compute_gaps folds in competing checkpoints.
std::vector<BenchmarkResult> evaluate_benchmark(const Policy& policy,
                                                const std::vector<Instance>& instances);

// Per-instance gap against the best length over all evaluated checkpoints; result
// lists must cover identical instances in identical order.
void compute_gaps(std::vector<std::vector<BenchmarkResult>>& per_checkpoint);

void write_benchmark_csv(const std::string& path,
                         const std::vector<BenchmarkResult>& results);

}  // namespace llrbc
