#include "llrbc/bench.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "llrbc/env.hpp"
#include "llrbc/rollout.hpp"

namespace llrbc {

namespace fs = std::filesystem;

std::vector<Instance> load_benchmark_dir(const std::string& dir, ProblemKind kind,
                                         int max_scale, std::vector<std::string>& warnings) {
  if (!fs::is_directory(dir)) throw config_error("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    if (ext == ".tsp" || ext == ".vrp") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  std::vector<Instance> out;
  for (const std::string& path : files) {
    Instance inst;
    try {
      inst = parse_benchmark_file(path);
    } catch (const std::exception& e) {
      warnings.push_back("skipping " + path + ": " + e.what());
      continue;
    }
    if (inst.kind != kind) {
      warnings.push_back("skipping " + path + ": problem kind does not match the checkpoint");
      continue;
    }
    if (inst.n() > max_scale) {
      std::ostringstream msg;
      msg << "skipping " << path << ": " << inst.n() << " nodes exceeds the decode limit "
          << max_scale;
      warnings.push_back(msg.str());
      continue;
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<BenchmarkResult> evaluate_benchmark(const Policy& policy,
                                                const std::vector<Instance>& instances) {
  std::vector<BenchmarkResult> out;
  out.reserve(instances.size());
  for (const Instance& inst : instances) {
    EvalRoute best = best_greedy_route(policy, inst);
    if (!route_is_feasible(inst, best.route)) {
      throw data_error("infeasible benchmark route on " + inst.source);
    }
    BenchmarkResult r;
    r.name = inst.source;
    const std::string prefix = "benchmark:";
    if (r.name.rfind(prefix, 0) == 0) r.name = r.name.substr(prefix.size());
    r.n = inst.n();
    r.normalized_length = best.length;
    r.raw_length = tour_length(inst, best.route, LengthConvention::tsplib_nint);
    r.gap = 0;
    out.push_back(std::move(r));
  }
  return out;
}

void compute_gaps(std::vector<std::vector<BenchmarkResult>>& per_checkpoint) {
  if (per_checkpoint.empty()) return;
  std::size_t count = per_checkpoint.front().size();
  for (const auto& results : per_checkpoint) {
    if (results.size() != count) throw data_error("benchmark result lists disagree");
  }
  for (std::size_t i = 0; i < count; ++i) {
    double best = per_checkpoint[0][i].raw_length;
    for (const auto& results : per_checkpoint) {
      if (results[i].name != per_checkpoint[0][i].name) {
        throw data_error("benchmark result lists disagree on instance order");
      }
      best = std::min(best, results[i].raw_length);
    }
    if (best <= 0) throw data_error("nonpositive benchmark length");
    for (auto& results : per_checkpoint) {
      results[i].gap = (results[i].raw_length - best) / best;
    }
  }
}

void write_benchmark_csv(const std::string& path,
                         const std::vector<BenchmarkResult>& results) {
  std::ostringstream out;
  out.precision(17);
  out << "name,n,raw_length,normalized_length,gap\n";
  for (const BenchmarkResult& r : results) {
    out << r.name << "," << r.n << "," << r.raw_length << "," << r.normalized_length << ","
        << r.gap << "\n";
  }
  write_text_atomic(path, out.str());
}

}  // namespace llrbc
