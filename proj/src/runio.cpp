#include "llrbc/runio.hpp"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace llrbc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string RunLayout::task_dir(Method m, int index, const std::string& task_name) const {
  std::ostringstream out;
  out << method_dir(m) << "/task_" << std::setw(2) << std::setfill('0') << index << "_"
      << task_name;
  return out.str();
}

std::string output_root() {
  const char* env = std::getenv("LLRBC_OUTPUT_ROOT");
  return env && *env ? std::string(env) : std::string("runs");
}

std::string resolve_run_dir(const RunConfig& cfg) {
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  std::ostringstream out;
  out << output_root() << "/run-" << std::hex << std::setw(16) << std::setfill('0')
      << cfg.config_hash();
  return out.str();
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw data_error("cannot create directory " + path + ": " + ec.message());
}

void write_manifest(const RunLayout& layout, const RunConfig& cfg) {
  json j;
  j["version"] = kVersion;
  j["config"] = json::parse(cfg.canonical_json());
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << cfg.config_hash();
  j["config_hash"] = hash.str();
  ensure_dir(layout.root);
  write_text_atomic(layout.manifest_path(), j.dump(2) + "\n");
}

bool check_manifest(const RunLayout& layout, const RunConfig& cfg) {
  if (!fs::exists(layout.manifest_path())) return false;
  json j;
  try {
    j = json::parse(read_text(layout.manifest_path()));
  } catch (const json::exception& e) {
    throw data_error(std::string("unreadable manifest: ") + e.what());
  }
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << cfg.config_hash();
  if (j.value("config_hash", std::string()) != hash.str()) {
    throw config_error("run directory " + layout.root +
                       " belongs to a different configuration; use a fresh out_dir");
  }
  return true;
}

std::vector<Instance> load_or_create_test_set(const RunLayout& layout, const TaskSpec& task,
                                              int count) {
  std::string path = layout.test_set_path(task.name());
  if (fs::exists(path)) {
    std::vector<Instance> set = read_instances(path);
    if (static_cast<int>(set.size()) != count) {
      throw data_error("test set " + path + " has wrong size");
    }
    return set;
  }
  std::vector<Instance> set = generate_instances(task, count);
  ensure_dir(layout.test_set_dir());
  write_instances(path, set);
  return set;
}

void write_eval_row(const std::string& path, const std::vector<std::string>& task_names,
                    const std::vector<double>& row) {
  if (task_names.size() != row.size()) throw data_error("eval row length mismatch");
  json j;
  j["tasks"] = task_names;
  j["mean_best_length"] = row;
  write_text_atomic(path, j.dump(2) + "\n");
}

std::vector<double> read_eval_row(const std::string& path,
                                  const std::vector<std::string>& task_names) {
  try {
    json j = json::parse(read_text(path));
    if (j.at("tasks").get<std::vector<std::string>>() != task_names) {
      throw data_error("eval row " + path + " covers different tasks");
    }
    auto row = j.at("mean_best_length").get<std::vector<double>>();
    if (row.size() != task_names.size()) throw data_error("eval row length mismatch");
    return row;
  } catch (const json::exception& e) {
    throw data_error(std::string("bad eval row json: ") + e.what());
  }
}

}  // namespace llrbc
