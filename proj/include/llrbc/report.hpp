#pragma once

#include <string>
#include <vector>

#include "llrbc/config.hpp"
#include "llrbc/metrics.hpp"

namespace llrbc {

// One method's completed matrix plus the run context needed to group it into a suite.
struct RunArtifacts {
  std::string run_dir;
  std::string method;
  std::string order_label;  // task names joined with '>'
  std::uint64_t seed = 0;
  std::string kind;
  std::string profile;
  PerformanceMatrix matrix;
};

// Walks root recursively for manifest.json files and collects every method matrix
// found beneath them. Missing matrices produce warnings, not errors.
std::vector<RunArtifacts> collect_artifacts(const std::string& root,
                                            std::vector<std::string>& warnings);

// Metrics for every artifact at k = K. The reference value per task is the minimum
// over all matrices in the artifact's suite: same kind, profile, seed, and task set.
struct ScoredArtifacts {
  std::vector<RunArtifacts> artifacts;
  std::vector<Eigen::MatrixXd> dbars;   // suite-normalized matrices, parallel
  std::vector<LifelongMetrics> scores;  // metrics at the full horizon, parallel
};

ScoredArtifacts score_artifacts(std::vector<RunArtifacts> artifacts);

// metrics.csv: one row per (artifact, k), raw metric values.
void write_metrics_csv(const std::string& path, const ScoredArtifacts& scored);

// Markdown summary: methods x metrics, mean (std) across runs of a method, values
// shown at the conventional 1e-3 scale. Also regenerates curve charts per run.
void write_report(const std::string& root);

}  // namespace llrbc
