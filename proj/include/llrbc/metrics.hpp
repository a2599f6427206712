#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "llrbc/common.hpp"

namespace llrbc {

// Raw test performance: row i = evaluated after training task i, column j = mean best
// tour length on task j's frozen test set. Every row covers all K columns, so
// next-task entries (for generalization) are present before that task is trained.
struct PerformanceMatrix {
  std::vector<std::string> task_names;
  Eigen::MatrixXd raw;  // K x K

  void validate() const;
};

void write_matrix_csv(const std::string& path, const PerformanceMatrix& m);
PerformanceMatrix read_matrix_csv(const std::string& path);

// (d - d*) / d*.
double normalize(double d, double d_star);

// Column-wise minimum over every matrix of one suite: the best value any method's
// checkpoint reached on that task. All matrices must share the column layout.
Eigen::VectorXd suite_reference(const std::vector<const PerformanceMatrix*>& mats);

Eigen::MatrixXd normalize_matrix(const PerformanceMatrix& m, const Eigen::VectorXd& d_star);

// The five lifelong metrics after k trained tasks (1-based). Forgetting and
// generalization need at least two tasks and are NaN at k=1.
struct LifelongMetrics {
  double ap = 0;   // average performance over tasks seen so far
  double af = 0;   // average (clipped) drop since each task finished
  double amf = 0;  // average worst-case drop over later checkpoints
  double apl = 0;  // average immediately-post-training performance
  double ag = 0;   // average next-task performance before training on it
};

LifelongMetrics compute_metrics(const Eigen::MatrixXd& dbar, int k);

}  // namespace llrbc
