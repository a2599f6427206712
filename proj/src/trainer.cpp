#include "llrbc/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "llrbc/adam.hpp"
#include "llrbc/rollout.hpp"

namespace llrbc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_diagnostic(const Policy& policy, const std::string& dir, int task_index,
                      int epoch, int batch, double loss, double drl, double bc) {
  if (dir.empty()) return;
  ensure_dir(dir);
  policy.save(dir + "/diagnostic_theta.json");
  json j;
  j["task"] = task_index;
  j["epoch"] = epoch;
  j["batch"] = batch;
  j["loss"] = loss;
  j["drl_loss"] = drl;
  j["bc_loss"] = bc;
  write_text_atomic(dir + "/diagnostic.json", j.dump(2) + "\n");
}

}  // namespace

void train_one_task(Policy& policy, ReservoirBuffer& buffer, const TaskSpec& task,
                    const RunConfig& cfg, Method method, int task_index,
                    const std::vector<EwcAnchor>& anchors, const TrainHooks& hooks) {
  const TrainingParams& t = cfg.train;
  int n = task.scale;
  auto bs_it = t.batch_size.find(n);
  if (bs_it == t.batch_size.end()) {
    throw config_error("no batch size configured for scale " + std::to_string(n));
  }
  int batch_count = bs_it->second;
  int batches = cfg.batches_per_epoch(n);
  Adam adam(policy.param_count(), t.lr);
  Net net(policy);
  long long batch_in_task = 0;

  for (int epoch = 0; epoch < t.epochs_per_task; ++epoch) {
    bool buffering_epoch = (epoch == t.epochs_per_task - 1) || t.buffer_all_epochs;
    for (int batch = 0; batch < batches; ++batch) {
      TaskSpec bspec = task;
      bspec.seed = derive_seed(cfg.seed, "train", static_cast<std::uint64_t>(task_index),
                               static_cast<std::uint64_t>(epoch),
                               static_cast<std::uint64_t>(batch));
      std::vector<Instance> instances = generate_instances(bspec, batch_count);
      std::vector<const Instance*> ptrs;
      ptrs.reserve(instances.size());
      for (const Instance& inst : instances) ptrs.push_back(&inst);

      Rng roll_rng(derive_seed(cfg.seed, "rollout", static_cast<std::uint64_t>(task_index),
                               static_cast<std::uint64_t>(epoch),
                               static_cast<std::uint64_t>(batch)));
      RolloutResult rb = rollout(policy, ptrs, DecodeMode::sample, n, &roll_rng, true);

      double ldrl = drl_loss(rb);
      std::vector<Eigen::MatrixXd> dprobs;
      dprobs.reserve(rb.steps.size());
      for (const StepAct& sa : rb.steps) {
        dprobs.emplace_back(Eigen::MatrixXd::Zero(sa.probs.rows(), sa.probs.cols()));
      }
      add_drl_grad(rb, dprobs);
      Grad grad(policy);
      net.backward(rb.enc, rb.steps, dprobs, grad);

      double lbc = 0;
      if (method == Method::llr_bc && t.alpha > 0 && !buffer.empty()) {
        Rng samp_rng(derive_seed(cfg.seed, "sampling", static_cast<std::uint64_t>(task_index),
                                 static_cast<std::uint64_t>(epoch),
                                 static_cast<std::uint64_t>(batch)));
        std::vector<int> picks = sample_experiences(buffer, t.sample_count, samp_rng);
        std::vector<const ExperienceBatch*> chosen;
        chosen.reserve(picks.size());
        for (int ix : picks) chosen.push_back(&buffer.entries()[static_cast<std::size_t>(ix)]);
        Grad bc_grad(policy);
        lbc = bc_loss(policy, chosen, t.divergence, t.uniform_weights, &bc_grad);
        grad.vec() += t.alpha * bc_grad.vec();
      }

      double penalty = 0;
      if (method == Method::ewc && !anchors.empty() && t.lambda != 0) {
        penalty = ewc_penalty(policy, anchors, t.lambda);
        add_ewc_grad(policy, anchors, t.lambda, grad);
      }

      double total = ldrl + t.alpha * lbc + penalty;
      if (!std::isfinite(total) || !grad.vec().allFinite()) {
        write_diagnostic(policy, hooks.diagnostic_dir, task_index, epoch, batch, total,
                         ldrl, lbc);
        std::ostringstream msg;
        msg << "non-finite loss at task " << task_index << " epoch " << epoch << " batch "
            << batch;
        throw data_error(msg.str());
      }

      adam.step(policy.theta(), grad.vec());

      if (method == Method::llr_bc && buffering_epoch) {
        Rng buf_rng(derive_seed(cfg.seed, "buffer", static_cast<std::uint64_t>(task_index),
                                static_cast<std::uint64_t>(epoch),
                                static_cast<std::uint64_t>(batch)));
        ExperienceBatch eb = collect_experiences(rb, t.experience_max_instances,
                                                 t.experience_max_trajectories, buf_rng);
        buffer.offer(std::move(eb), buf_rng);
      }

      if (hooks.log_line) {
        json row;
        row["task"] = task_index;
        row["epoch"] = epoch;
        row["batch"] = batch;
        row["loss"] = total;
        row["drl_loss"] = ldrl;
        row["bc_loss"] = lbc;
        row["buffer_size"] = static_cast<int>(buffer.entries().size());
        row["buffer_N"] = buffer.offered();
        hooks.log_line(row.dump());
      }

      ++batch_in_task;
      if (hooks.curve_probe && t.curve_eval_every > 0 &&
          batch_in_task % t.curve_eval_every == 0) {
        hooks.curve_probe(epoch, batch_in_task);
      }
    }
  }
}

double mean_best_length(const Policy& policy, const std::vector<Instance>& set) {
  if (set.empty()) throw data_error("empty test set");
  std::vector<double> best = evaluate_lengths(policy, set, 0);
  double acc = 0;
  for (double v : best) acc += v;
  return acc / static_cast<double>(best.size());
}

namespace {

// Drops any previous probe rows of this task, so a resumed task starts clean.
void reset_curve_rows(const std::string& path, int task_index) {
  if (!fs::exists(path)) return;
  std::istringstream in(read_text(path));
  std::ostringstream keep;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      json row = json::parse(line);
      if (row.value("task", -1) == task_index) continue;
    } catch (const json::exception&) {
      continue;
    }
    keep << line << "\n";
  }
  write_text_atomic(path, keep.str());
}

bool task_complete_on_disk(const RunLayout& layout, Method method, int index,
                           const std::string& name) {
  std::string tdir = layout.task_dir(method, index, name);
  if (!fs::exists(tdir + "/checkpoint.json") || !fs::exists(tdir + "/eval.json")) {
    return false;
  }
  if (method == Method::llr_bc && !fs::exists(tdir + "/buffer.json")) return false;
  if (method == Method::ewc && !fs::exists(tdir + "/anchor.json")) return false;
  return true;
}

EwcAnchor load_anchor(const std::string& path, Eigen::Index params) {
  try {
    json j = json::parse(read_text(path));
    auto fisher = j.at("fisher").get<std::vector<double>>();
    auto theta = j.at("theta_star").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(fisher.size()) != params ||
        static_cast<Eigen::Index>(theta.size()) != params) {
      throw data_error("anchor " + path + " has wrong shape");
    }
    EwcAnchor a;
    a.fisher = Eigen::Map<Eigen::VectorXd>(fisher.data(), params);
    a.theta_star = Eigen::Map<Eigen::VectorXd>(theta.data(), params);
    return a;
  } catch (const json::exception& e) {
    throw data_error(std::string("bad anchor json: ") + e.what());
  }
}

void save_anchor(const std::string& path, const EwcAnchor& a) {
  json j;
  j["fisher"] = std::vector<double>(a.fisher.data(), a.fisher.data() + a.fisher.size());
  j["theta_star"] =
      std::vector<double>(a.theta_star.data(), a.theta_star.data() + a.theta_star.size());
  write_text_atomic(path, j.dump());
}

}  // namespace

PerformanceMatrix lifelong_learn(const RunConfig& cfg, Method method,
                                 const RunLayout& layout) {
  std::vector<TaskSpec> tasks = cfg.order();
  int K = static_cast<int>(tasks.size());
  std::vector<std::string> names;
  names.reserve(tasks.size());
  for (const TaskSpec& t : tasks) names.push_back(t.name());

  std::vector<std::vector<Instance>> test_sets;
  test_sets.reserve(tasks.size());
  for (const TaskSpec& t : tasks) {
    test_sets.push_back(load_or_create_test_set(layout, t, cfg.train.test_instances));
  }

  ModelConfig mc;
  mc.kind = cfg.kind;
  Policy policy(mc);
  {
    Rng init_rng(derive_seed(cfg.seed, "init", std::uint64_t{0}));
    policy.init_params(init_rng);
  }
  ReservoirBuffer buffer(cfg.train.buffer_capacity);
  std::vector<EwcAnchor> anchors;

  PerformanceMatrix m;
  m.task_names = names;
  m.raw = Eigen::MatrixXd::Zero(K, K);

  ensure_dir(layout.method_dir(method));

  for (int i = 0; i < K; ++i) {
    std::string tdir = layout.task_dir(method, i, names[static_cast<std::size_t>(i)]);
    if (task_complete_on_disk(layout, method, i, names[static_cast<std::size_t>(i)])) {
      Policy loaded = Policy::load(tdir + "/checkpoint.json");
      if (loaded.param_count() != policy.param_count() ||
          loaded.config().kind != policy.config().kind) {
        throw data_error("checkpoint " + tdir + " does not match this run's model");
      }
      policy = std::move(loaded);
      if (method == Method::llr_bc) buffer = ReservoirBuffer::load(tdir + "/buffer.json");
      if (method == Method::ewc) {
        anchors.push_back(load_anchor(tdir + "/anchor.json", policy.param_count()));
      }
      std::vector<double> row = read_eval_row(tdir + "/eval.json", names);
      for (int j = 0; j < K; ++j) m.raw(i, j) = row[static_cast<std::size_t>(j)];
      continue;
    }

    ensure_dir(tdir);
    if (method == Method::restart && i > 0) {
      Rng reinit(derive_seed(cfg.seed, "init", static_cast<std::uint64_t>(i)));
      policy.init_params(reinit);
    }

    std::ofstream log(tdir + "/log.jsonl", std::ios::trunc);
    if (!log) throw data_error("cannot open training log in " + tdir);
    reset_curve_rows(layout.curves_path(method), i);

    TrainHooks hooks;
    hooks.diagnostic_dir = tdir;
    hooks.log_line = [&log](const std::string& line) { log << line << "\n"; };
    hooks.curve_probe = [&](int epoch, long long batch_in_task) {
      json row;
      row["task"] = i;
      row["epoch"] = epoch;
      row["batch_in_task"] = batch_in_task;
      json evals = json::object();
      int probe_count = std::min(cfg.train.curve_eval_instances, cfg.train.test_instances);
      for (int j = 0; j <= i; ++j) {
        std::vector<Instance> subset(test_sets[static_cast<std::size_t>(j)].begin(),
                                     test_sets[static_cast<std::size_t>(j)].begin() + probe_count);
        evals[names[static_cast<std::size_t>(j)]] = mean_best_length(policy, subset);
      }
      row["mean_best_length"] = evals;
      std::ofstream curves(layout.curves_path(method), std::ios::app);
      curves << row.dump() << "\n";
    };

    train_one_task(policy, buffer, tasks[static_cast<std::size_t>(i)], cfg, method, i,
                   anchors, hooks);
    log.flush();

    if (method == Method::ewc) {
      TaskSpec fspec = tasks[static_cast<std::size_t>(i)];
      fspec.seed = derive_seed(cfg.seed, "fisher", static_cast<std::uint64_t>(i));
      std::vector<Instance> sample = generate_instances(fspec, cfg.train.fisher_instances);
      std::vector<const Instance*> ptrs;
      ptrs.reserve(sample.size());
      for (const Instance& inst : sample) ptrs.push_back(&inst);
      Rng frng(derive_seed(cfg.seed, "fisher", static_cast<std::uint64_t>(i),
                           std::uint64_t{1}));
      EwcAnchor a;
      a.fisher = fisher_estimate(policy, ptrs, fspec.scale, frng);
      a.theta_star = policy.theta();
      save_anchor(tdir + "/anchor.json", a);
      anchors.push_back(std::move(a));
    }

    std::vector<double> row(static_cast<std::size_t>(K));
    for (int j = 0; j < K; ++j) {
      row[static_cast<std::size_t>(j)] =
          mean_best_length(policy, test_sets[static_cast<std::size_t>(j)]);
      m.raw(i, j) = row[static_cast<std::size_t>(j)];
    }

    policy.save(tdir + "/checkpoint.json");
    if (method == Method::llr_bc) buffer.save(tdir + "/buffer.json");
    write_eval_row(tdir + "/eval.json", names, row);
  }

  write_matrix_csv(layout.matrix_path(method), m);
  return m;
}

}  // namespace llrbc
