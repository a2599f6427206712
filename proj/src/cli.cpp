#include "llrbc/cli.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "llrbc/bench.hpp"
#include "llrbc/report.hpp"
#include "llrbc/trainer.hpp"

namespace llrbc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_preset(const std::string& s) {
  std::string v = s;
  if (v.rfind("order", 0) == 0) v = v.substr(5);
  try {
    return std::stoi(v);
  } catch (const std::exception&) {
    throw config_error("bad preset: " + s);
  }
}

struct RunFlags {
  std::string config_path;
  std::string profile, kind, preset, tasks, methods, out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int force_scale = -1;
  bool validate_only = false;
};

RunConfig assemble_config(const RunFlags& f) {
  json j = json::object();
  if (!f.config_path.empty()) {
    try {
      j = json::parse(read_text(f.config_path));
    } catch (const json::exception& e) {
      throw config_error(std::string("config is not valid json: ") + e.what());
    } catch (const data_error& e) {
      throw config_error(e.what());
    }
  }
  if (!f.profile.empty()) j["profile"] = f.profile;
  if (!f.kind.empty()) j["kind"] = f.kind;
  if (!f.preset.empty()) j["preset"] = parse_preset(f.preset);
  if (!f.tasks.empty()) j["tasks"] = split_commas(f.tasks);
  if (!f.methods.empty()) j["methods"] = split_commas(f.methods);
  if (f.seed_set) j["seed"] = f.seed;
  if (!f.out_dir.empty()) j["out_dir"] = f.out_dir;
  if (f.force_scale >= 0) j["force_scale"] = f.force_scale;
  return RunConfig::from_json_text(j.dump());
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--profile", f.profile, "desk or paper");
  cmd->add_option("--kind", f.kind, "tsp or cvrp");
  cmd->add_option("--preset", f.preset, "task order preset, 1..5 or order1..order5");
  cmd->add_option("--tasks", f.tasks, "explicit task order, e.g. U,R,GM");
  cmd->add_option("--method", f.methods, "comma-separated: llr_bc,finetune,restart,ewc");
  cmd->add_option("--seed", f.seed, "run seed")->each([&f](const std::string&) {
    f.seed_set = true;
  });
  cmd->add_option("--out", f.out_dir, "run directory (default under the output root)");
  cmd->add_option("--force-scale", f.force_scale,
                  "use one node count for every task (0 = per-distribution scales)");
}

int cmd_run(const RunFlags& f) {
  RunConfig cfg = assemble_config(f);
  if (f.validate_only) {
    std::ostringstream hash;
    hash << std::hex << cfg.config_hash();
    std::cout << "config ok, hash " << hash.str() << "\n";
    return 0;
  }
  RunLayout layout{resolve_run_dir(cfg)};
  ensure_dir(layout.root);
  check_manifest(layout, cfg);
  write_manifest(layout, cfg);
  for (Method method : cfg.methods) {
    std::cout << "training " << to_string(method) << " in " << layout.root << "\n";
    lifelong_learn(cfg, method, layout);
  }
  write_report(layout.root);
  std::cout << "run complete: " << layout.root << "\n";
  std::cout << "report: " << layout.report_path() << "\n";
  return 0;
}

int cmd_report(const std::string& dir) {
  write_report(dir);
  std::cout << read_text(dir + "/report.md");
  return 0;
}

int cmd_gen_tasks(const RunFlags& f) {
  RunConfig cfg = assemble_config(f);
  RunLayout layout{resolve_run_dir(cfg)};
  ensure_dir(layout.root);
  for (const TaskSpec& task : cfg.order()) {
    load_or_create_test_set(layout, task, cfg.train.test_instances);
    std::cout << layout.test_set_path(task.name()) << "\n";
  }
  return 0;
}

int cmd_bench_eval(const std::vector<std::string>& checkpoints, const std::string& dir,
                   const std::string& out_dir, int max_scale) {
  if (checkpoints.empty()) throw config_error("bench-eval needs at least one --checkpoint");
  std::vector<Policy> policies;
  policies.reserve(checkpoints.size());
  for (const std::string& path : checkpoints) {
    try {
      policies.push_back(Policy::load(path));
    } catch (const data_error& e) {
      throw config_error("cannot load checkpoint " + path + ": " + e.what());
    }
    if (policies.back().config().kind != policies.front().config().kind) {
      throw config_error("checkpoints mix problem kinds");
    }
  }
  std::vector<std::string> warnings;
  std::vector<Instance> instances =
      load_benchmark_dir(dir, policies.front().config().kind, max_scale, warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
  if (instances.empty()) throw config_error("no usable benchmark instances in " + dir);

  std::vector<std::vector<BenchmarkResult>> results;
  results.reserve(policies.size());
  for (std::size_t i = 0; i < policies.size(); ++i) {
    results.push_back(evaluate_benchmark(policies[i], instances));
  }
  compute_gaps(results);

  ensure_dir(out_dir);
  for (std::size_t i = 0; i < policies.size(); ++i) {
    std::string stem = fs::path(checkpoints[i]).stem().string();
    std::string path = out_dir + "/" + stem + "_bench.csv";
    write_benchmark_csv(path, results[i]);
    double mean_gap = 0;
    for (const BenchmarkResult& r : results[i]) mean_gap += r.gap;
    mean_gap /= static_cast<double>(results[i].size());
    std::cout << stem << ": " << results[i].size() << " instances, mean gap " << mean_gap
              << ", csv " << path << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Lifelong learning for constructive routing solvers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  RunFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "train methods over a task sequence");
  add_run_flags(run_cmd, run_flags);
  run_cmd->add_flag("--validate-only", run_flags.validate_only,
                    "parse and validate the config, then exit");

  std::string report_dir;
  CLI::App* report_cmd = app.add_subcommand("report", "summarize run artifacts");
  report_cmd->add_option("dir", report_dir, "directory containing runs")->required();

  RunFlags gen_flags;
  CLI::App* gen_cmd = app.add_subcommand("gen-tasks", "emit frozen test sets");
  add_run_flags(gen_cmd, gen_flags);

  std::vector<std::string> checkpoints;
  std::string bench_dir, bench_out = "bench_results";
  int max_scale = 1001;
  CLI::App* bench_cmd =
      app.add_subcommand("bench-eval", "evaluate checkpoints on library instances");
  bench_cmd->add_option("--checkpoint", checkpoints, "checkpoint file (repeatable)")
      ->required();
  bench_cmd->add_option("--dir", bench_dir, "directory of .tsp/.vrp files")->required();
  bench_cmd->add_option("--out", bench_out, "output directory for CSVs");
  bench_cmd->add_option("--max-scale", max_scale, "skip instances above this node count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    if (code == 0) return 0;  // --help / --version
    throw config_error("bad command line");
  }

  if (run_cmd->parsed()) return cmd_run(run_flags);
  if (report_cmd->parsed()) return cmd_report(report_dir);
  if (gen_cmd->parsed()) return cmd_gen_tasks(gen_flags);
  if (bench_cmd->parsed()) return cmd_bench_eval(checkpoints, bench_dir, bench_out, max_scale);
  throw config_error("no subcommand given");
}

}  // namespace llrbc
