#include "llrbc/config.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"

namespace llrbc {

using nlohmann::json;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::llr_bc: return "llr_bc";
    case Method::finetune: return "finetune";
    case Method::restart: return "restart";
    case Method::ewc: return "ewc";
  }
  throw data_error("bad method enum");
}

Method method_from_string(std::string_view s) {
  std::string k(s);
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) {
    return c == '-' ? '_' : static_cast<char>(std::tolower(c));
  });
  if (k == "llr_bc" || k == "llrbc") return Method::llr_bc;
  if (k == "finetune" || k == "fine_tuning" || k == "ft") return Method::finetune;
  if (k == "restart") return Method::restart;
  if (k == "ewc") return Method::ewc;
  throw config_error("unknown method: " + std::string(s));
}

namespace {

struct Profile {
  std::map<int, int> role_scale;         // scale role -> node count
  std::map<int, double> capacity;        // scale -> vehicle capacity
  std::map<int, int> instances_per_epoch;
  std::map<int, int> batch_size;
  int epochs_per_task;
  int buffer_capacity;
  int sample_count;
  int test_instances;
  int fisher_instances;
  int experience_max_instances;
  int experience_max_trajectories;
  double alpha;
};

const Profile& profile_named(const std::string& name) {
  // Desk tasks are small enough that the policy nearly converges on each one, which
  // shrinks the policy-gradient term while the consolidation term keeps its scale.
  // The desk consolidation weight is reduced to keep the two in balance; measured on
  // 3-seed desk suites, alpha=3 halves worst-case forgetting several times over while
  // staying within a few hundredths of a percent of fine-tuning on freshly trained
  // tasks, whereas the full-scale weight trades new-task quality for no retention gain.
  static const Profile desk{
      {{0, 10}, {1, 20}, {2, 30}},
      {{10, 30.0}, {20, 40.0}, {30, 50.0}},
      {{10, 2000}, {20, 800}, {30, 400}},
      {{10, 64}, {20, 32}, {30, 16}},
      20, 50, 4, 200, 16, 8, 16, 3.0};
  static const Profile paper{
      {{0, 20}, {1, 50}, {2, 100}},
      {{20, 30.0}, {50, 40.0}, {100, 50.0}},
      {{20, 10000}, {50, 4000}, {100, 2000}},
      {{20, 64}, {50, 32}, {100, 16}},
      200, 1000, 16, 1000, 64, 0, 0, 100.0};
  if (name == "desk") return desk;
  if (name == "paper") return paper;
  throw config_error("unknown profile: " + name);
}

double capacity_for_scale(const Profile& prof, int scale) {
  auto it = prof.capacity.find(scale);
  if (it != prof.capacity.end()) return it->second;
  // Forced off-profile scales keep the monotone band structure.
  double cap = 30.0;
  for (const auto& [s, c] : prof.capacity) {
    if (scale >= s) cap = c;
  }
  return cap;
}

}  // namespace

void RunConfig::validate() const {
  profile_named(profile);
  if (tasks.empty() && (preset < 1 || preset > 5)) {
    throw config_error("preset order must be 1..5");
  }
  if (methods.empty()) throw config_error("at least one method is required");
  if (force_scale < 0 || force_scale == 1) throw config_error("force_scale must be 0 or >= 2");
  const TrainingParams& t = train;
  if (t.epochs_per_task < 1) throw config_error("epochs_per_task must be >= 1");
  if (t.buffer_capacity < 1) throw config_error("buffer capacity must be >= 1");
  if (t.sample_count < 1) throw config_error("sample count must be >= 1");
  if (t.alpha < 0) throw config_error("alpha must be >= 0");
  if (t.lr <= 0) throw config_error("learning rate must be > 0");
  if (t.lambda < 0) throw config_error("lambda must be >= 0");
  if (t.test_instances < 1) throw config_error("test_instances must be >= 1");
  if (t.fisher_instances < 1) throw config_error("fisher_instances must be >= 1");
  if (t.curve_eval_every < 0) throw config_error("curve_eval_every must be >= 0");
  if (t.curve_eval_instances < 1) throw config_error("curve_eval_instances must be >= 1");
  if (t.experience_max_instances < 0 || t.experience_max_trajectories < 0) {
    throw config_error("experience caps must be >= 0");
  }
  for (const TaskSpec& spec : order()) spec.validate();
}

std::vector<TaskSpec> RunConfig::order() const {
  const Profile& prof = profile_named(profile);
  std::vector<Distribution> dists = tasks;
  if (dists.empty()) {
    auto arr = preset_order(preset);
    dists.assign(arr.begin(), arr.end());
  }
  std::vector<TaskSpec> out;
  out.reserve(dists.size());
  for (Distribution d : dists) {
    TaskSpec spec;
    spec.distribution = d;
    spec.kind = kind;
    spec.scale = force_scale > 0 ? force_scale : prof.role_scale.at(scale_role(d));
    if (kind == ProblemKind::cvrp) spec.capacity = capacity_for_scale(prof, spec.scale);
    spec.seed = derive_seed(seed, "test-" + spec.name());
    out.push_back(spec);
  }
  return out;
}

int RunConfig::batches_per_epoch(int scale) const {
  auto ii = train.instances_per_epoch.find(scale);
  auto bi = train.batch_size.find(scale);
  if (ii == train.instances_per_epoch.end() || bi == train.batch_size.end()) {
    throw config_error("no per-epoch settings for scale " + std::to_string(scale));
  }
  return std::max(1, ii->second / bi->second);
}

namespace {

json scale_map_to_json(const std::map<int, int>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[std::to_string(k)] = v;
  return out;
}

std::map<int, int> scale_map_from_json(const json& j) {
  std::map<int, int> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    out[std::stoi(it.key())] = it.value().get<int>();
  }
  return out;
}

}  // namespace

std::string RunConfig::canonical_json() const {
  json j;
  j["profile"] = profile;
  j["kind"] = std::string(to_string(kind));
  j["preset"] = preset;
  json jt = json::array();
  for (Distribution d : tasks) jt.push_back(std::string(to_string(d)));
  j["tasks"] = jt;
  j["force_scale"] = force_scale;
  json jm = json::array();
  for (Method m : methods) jm.push_back(std::string(to_string(m)));
  j["methods"] = jm;
  j["seed"] = seed;
  json o;
  o["epochs_per_task"] = train.epochs_per_task;
  o["instances_per_epoch"] = scale_map_to_json(train.instances_per_epoch);
  o["batch_size"] = scale_map_to_json(train.batch_size);
  o["buffer_capacity"] = train.buffer_capacity;
  o["sample_count"] = train.sample_count;
  o["alpha"] = train.alpha;
  o["divergence"] = train.divergence == DivergenceMode::reverse_kld ? "rkld" : "kld";
  o["uniform_weights"] = train.uniform_weights;
  o["buffer_all_epochs"] = train.buffer_all_epochs;
  o["lr"] = train.lr;
  o["lambda"] = train.lambda;
  o["fisher_instances"] = train.fisher_instances;
  o["test_instances"] = train.test_instances;
  o["experience_max_instances"] = train.experience_max_instances;
  o["experience_max_trajectories"] = train.experience_max_trajectories;
  o["curve_eval_every"] = train.curve_eval_every;
  o["curve_eval_instances"] = train.curve_eval_instances;
  j["train"] = o;
  // out_dir is a placement detail, not a semantic field, so it stays out of the hash.
  return j.dump();
}

std::uint64_t RunConfig::config_hash() const { return fnv1a64(canonical_json()); }

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config is not valid json: ") + e.what());
  }
  try {
    RunConfig cfg;
    cfg.profile = j.value("profile", std::string("desk"));
    const Profile& prof = profile_named(cfg.profile);
    cfg.kind = problem_kind_from_string(j.value("kind", std::string("tsp")));
    cfg.preset = j.value("preset", 1);
    if (j.contains("tasks")) {
      for (const json& t : j.at("tasks")) {
        cfg.tasks.push_back(distribution_from_string(t.get<std::string>()));
      }
    }
    cfg.force_scale = j.value("force_scale", 0);
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const json& m : j.at("methods")) {
        cfg.methods.push_back(method_from_string(m.get<std::string>()));
      }
    }
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.out_dir = j.value("out_dir", std::string());

    TrainingParams& t = cfg.train;
    t.epochs_per_task = prof.epochs_per_task;
    t.instances_per_epoch = prof.instances_per_epoch;
    t.batch_size = prof.batch_size;
    t.buffer_capacity = prof.buffer_capacity;
    t.sample_count = prof.sample_count;
    t.test_instances = prof.test_instances;
    t.fisher_instances = prof.fisher_instances;
    t.experience_max_instances = prof.experience_max_instances;
    t.experience_max_trajectories = prof.experience_max_trajectories;
    t.alpha = prof.alpha;

    json o = j.value("overrides", json::object());
    for (auto it = o.begin(); it != o.end(); ++it) {
      const std::string& key = it.key();
      const json& v = it.value();
      if (key == "epochs_per_task") t.epochs_per_task = v.get<int>();
      else if (key == "instances_per_epoch") t.instances_per_epoch = scale_map_from_json(v);
      else if (key == "batch_size") t.batch_size = scale_map_from_json(v);
      else if (key == "buffer_capacity") t.buffer_capacity = v.get<int>();
      else if (key == "sample_count") t.sample_count = v.get<int>();
      else if (key == "alpha") t.alpha = v.get<double>();
      else if (key == "divergence") {
        std::string d = v.get<std::string>();
        if (d == "rkld") t.divergence = DivergenceMode::reverse_kld;
        else if (d == "kld") t.divergence = DivergenceMode::kld;
        else throw config_error("divergence must be rkld or kld");
      } else if (key == "uniform_weights") t.uniform_weights = v.get<bool>();
      else if (key == "buffer_all_epochs") t.buffer_all_epochs = v.get<bool>();
      else if (key == "lr") t.lr = v.get<double>();
      else if (key == "lambda") t.lambda = v.get<double>();
      else if (key == "fisher_instances") t.fisher_instances = v.get<int>();
      else if (key == "test_instances") t.test_instances = v.get<int>();
      else if (key == "experience_max_instances") t.experience_max_instances = v.get<int>();
      else if (key == "experience_max_trajectories") t.experience_max_trajectories = v.get<int>();
      else if (key == "curve_eval_every") t.curve_eval_every = v.get<int>();
      else if (key == "curve_eval_instances") t.curve_eval_instances = v.get<int>();
      else throw config_error("unknown override: " + key);
    }
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw config_error(std::string("bad config field: ") + e.what());
  }
}

RunConfig RunConfig::from_file(const std::string& path) {
  try {
    return from_json_text(read_text(path));
  } catch (const data_error& e) {
    throw config_error(e.what());
  }
}

}  // namespace llrbc
