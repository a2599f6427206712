#pragma once

#include <string>
#include <vector>

#include "llrbc/config.hpp"
#include "llrbc/metrics.hpp"

namespace llrbc {

// Resolved on-disk layout of one run directory:
//   manifest.json                       config + hash + version
//   test_sets/<task>.jsonl              frozen instances, shared by all methods
//   <method>/task_<ii>_<name>/          checkpoint.json, buffer.json, log.jsonl,
//                                       eval.json, anchor.json (EWC)
//   <method>/matrix.csv                 raw performance matrix
//   <method>/curves.jsonl               optional mid-training probes
//   metrics.csv, report.md              cross-method post-processing
struct RunLayout {
  std::string root;

  std::string manifest_path() const { return root + "/manifest.json"; }
  std::string test_set_dir() const { return root + "/test_sets"; }
  std::string test_set_path(const std::string& task_name) const {
    return test_set_dir() + "/" + task_name + ".jsonl";
  }
  std::string method_dir(Method m) const { return root + "/" + std::string(to_string(m)); }
  std::string task_dir(Method m, int index, const std::string& task_name) const;
  std::string matrix_path(Method m) const { return method_dir(m) + "/matrix.csv"; }
  std::string curves_path(Method m) const { return method_dir(m) + "/curves.jsonl"; }
  std::string metrics_path() const { return root + "/metrics.csv"; }
  std::string report_path() const { return root + "/report.md"; }
};

// LLRBC_OUTPUT_ROOT, or ./runs when unset.
std::string output_root();

// cfg.out_dir when set, otherwise <output_root>/run-<hash16>.
std::string resolve_run_dir(const RunConfig& cfg);

void ensure_dir(const std::string& path);

void write_manifest(const RunLayout& layout, const RunConfig& cfg);

// True when a manifest exists and matches the config hash; a mismatch with existing
// artifacts is an error (refuses to mix two experiments in one directory).
bool check_manifest(const RunLayout& layout, const RunConfig& cfg);

// Loads the frozen test set, generating and persisting it on first use.
std::vector<Instance> load_or_create_test_set(const RunLayout& layout, const TaskSpec& task,
                                              int count);

// Per-task evaluation row persistence (enables resume at task granularity).
void write_eval_row(const std::string& path, const std::vector<std::string>& task_names,
                    const std::vector<double>& row);
std::vector<double> read_eval_row(const std::string& path,
                                  const std::vector<std::string>& task_names);

}  // namespace llrbc
