#pragma once

#include <vector>

#include "llrbc/env.hpp"
#include "llrbc/rng.hpp"
#include "llrbc/rollout.hpp"

namespace llrbc {

// A buffered decision point: enough state to recompute the policy's distribution
// exactly, plus the behavior the solver exhibited when the experience was taken.
struct Experience {
  int instance_ref = 0;  // index into the owning batch's instance list
  std::vector<std::uint8_t> visited;
  int current = 0;
  double remaining = 0;
  Behavior behavior;
};

struct ExperienceBatch {
  std::vector<Instance> instances;
  std::vector<Experience> entries;
};

// Fixed-capacity reservoir over experience batches. Every batch ever offered has the
// same |B|/N chance of residing in the buffer.
class ReservoirBuffer {
 public:
  explicit ReservoirBuffer(int capacity);

  void offer(ExperienceBatch batch, Rng& rng);
  const std::vector<ExperienceBatch>& entries() const { return entries_; }
  int capacity() const { return capacity_; }
  long long offered() const { return offered_; }
  bool empty() const { return entries_.empty(); }

  std::string to_json() const;
  static ReservoirBuffer from_json(const std::string& text);
  void save(const std::string& path) const;
  static ReservoirBuffer load(const std::string& path);

 private:
  int capacity_;
  long long offered_ = 0;  // N: total batches offered for buffering
  std::vector<ExperienceBatch> entries_;
};

// Confidence weight w = 1 - var(P)/var_max(|P|) over the full action vector,
// masked zeros included; var_max(n) = (n-1)/n^2. Uniform distributions score 1
// (least confident, most emphasis), one-hot distributions score 0.
double confidence_weight(const Behavior& behavior);

// Rescales raw weights to sum to 1; an all-zero set falls back to uniform.
std::vector<double> normalize_weights(const std::vector<double>& raw);

// count draws, without replacement when count <= buffer size, with replacement
// otherwise. Returns indices into entries().
std::vector<int> sample_experiences(const ReservoirBuffer& buffer, int count, Rng& rng);

// Builds the batch to offer the reservoir from one training step's rollouts: up to
// max_instances instances, up to max_trajectories trajectories each, one uniformly
// drawn decision state per trajectory (0 = keep everything).
ExperienceBatch collect_experiences(const RolloutResult& rb, int max_instances,
                                    int max_trajectories, Rng& rng);

}  // namespace llrbc
