#pragma once

#include <functional>
#include <string>
#include <vector>

#include "llrbc/buffer.hpp"
#include "llrbc/config.hpp"
#include "llrbc/losses.hpp"
#include "llrbc/metrics.hpp"
#include "llrbc/runio.hpp"

namespace llrbc {

struct TrainHooks {
  // One JSON object per training batch.
  std::function<void(const std::string&)> log_line;
  // Invoked after the update on every curve_eval_every-th batch of the task.
  std::function<void(int epoch, long long batch_in_task)> curve_probe;
  // Non-finite-loss snapshots are written here when set.
  std::string diagnostic_dir;
};

// One task of the lifelong loop: per batch, draw fresh instances, roll out from every
// start node, take one optimizer step on the policy-gradient loss plus the method's
// consolidation term; in the final epoch (every epoch in task-free mode) offer each
// batch's experiences to the reservoir. Mutates policy and buffer in place.
void train_one_task(Policy& policy, ReservoirBuffer& buffer, const TaskSpec& task,
                    const RunConfig& cfg, Method method, int task_index,
                    const std::vector<EwcAnchor>& anchors, const TrainHooks& hooks);

// The full task sequence for one method: shared initial parameters, per-task training,
// a full evaluation row over every task's frozen test set after each task, and
// checkpoint/buffer/anchor persistence. Completed tasks found on disk are skipped, so
// an interrupted run resumes at task granularity.
PerformanceMatrix lifelong_learn(const RunConfig& cfg, Method method,
                                 const RunLayout& layout);

// Mean best-of-all-starts greedy length over a test set.
double mean_best_length(const Policy& policy, const std::vector<Instance>& set);

}  // namespace llrbc
