#include "llrbc/buffer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace llrbc {

using nlohmann::json;

ReservoirBuffer::ReservoirBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw config_error("buffer capacity must be positive");
}

void ReservoirBuffer::offer(ExperienceBatch batch, Rng& rng) {
  ++offered_;
  if (static_cast<int>(entries_.size()) < capacity_) {
    entries_.push_back(std::move(batch));
    return;
  }
  // Classic reservoir replacement: the new batch lands with probability cap/N.
  if (offered_ > std::numeric_limits<int>::max()) {
    throw data_error("reservoir offer count overflow");
  }
  int j = rng.uniform_int(static_cast<int>(offered_));
  if (j < capacity_) entries_[static_cast<std::size_t>(j)] = std::move(batch);
}

double confidence_weight(const Behavior& behavior) {
  const Eigen::VectorXd& p = behavior.probs;
  const Eigen::Index n = p.size();
  if (n < 2) throw data_error("confidence weight needs at least two actions");
  double mean = p.mean();
  double var = (p.array() - mean).square().sum() / static_cast<double>(n);
  double var_max =
      static_cast<double>(n - 1) / (static_cast<double>(n) * static_cast<double>(n));
  double w = 1.0 - var / var_max;
  return std::clamp(w, 0.0, 1.0);
}

std::vector<double> normalize_weights(const std::vector<double>& raw) {
  std::vector<double> out(raw.size());
  if (raw.empty()) return out;
  double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (sum <= 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(raw.size()));
    return out;
  }
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / sum;
  return out;
}

std::vector<int> sample_experiences(const ReservoirBuffer& buffer, int count, Rng& rng) {
  int size = static_cast<int>(buffer.entries().size());
  if (size == 0) throw data_error("cannot sample from an empty buffer");
  if (count < 1) throw config_error("sample count must be positive");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count));
  if (count <= size) {
    std::vector<int> idx(static_cast<std::size_t>(size));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < count; ++i) {
      int j = i + rng.uniform_int(size - i);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      out.push_back(idx[static_cast<std::size_t>(i)]);
    }
  } else {
    for (int i = 0; i < count; ++i) out.push_back(rng.uniform_int(size));
  }
  return out;
}

namespace {

ConstructionState state_at(const Instance& inst, const Trajectory& traj, int depth) {
  ConstructionState s = reset(inst, traj.start_node);
  if (inst.kind == ProblemKind::cvrp) s = step(s, traj.start_node);
  for (int t = 0; t < depth; ++t) s = step(s, traj.actions[static_cast<std::size_t>(t)]);
  return s;
}

}  // namespace

ExperienceBatch collect_experiences(const RolloutResult& rb, int max_instances,
                                    int max_trajectories, Rng& rng) {
  ExperienceBatch batch;
  int B = static_cast<int>(rb.instances.size());
  int keep_b = (max_instances > 0) ? std::min(max_instances, B) : B;
  int keep_s = (max_trajectories > 0) ? std::min(max_trajectories, rb.starts) : rb.starts;
  batch.instances.reserve(static_cast<std::size_t>(keep_b));
  for (int i = 0; i < keep_b; ++i) batch.instances.push_back(*rb.instances[static_cast<std::size_t>(i)]);
  int T = batch.instances.empty() ? 0 : batch.instances.front().action_count();
  for (int i = 0; i < keep_b; ++i) {
    for (int j = 0; j < keep_s; ++j) {
      int row = i * rb.starts + j;
      const Trajectory& traj = rb.trajectories[static_cast<std::size_t>(row)];
      int len = static_cast<int>(traj.actions.size());
      if (len == 0) continue;
      int depth = rng.uniform_int(len);
      // A row is active at exactly the steps where it recorded a decision, in order,
      // so decision `depth` lives at decode step `depth`.
      const StepAct& sa = rb.steps[static_cast<std::size_t>(depth)];
      Experience e;
      e.instance_ref = i;
      ConstructionState s = state_at(batch.instances[static_cast<std::size_t>(i)], traj, depth);
      e.visited = s.visited;
      e.current = s.current;
      e.remaining = s.remaining;
      e.behavior.probs = sa.probs.row(row).transpose();
      e.behavior.mask.assign(sa.mask.begin() + static_cast<std::ptrdiff_t>(row) * T,
                             sa.mask.begin() + static_cast<std::ptrdiff_t>(row + 1) * T);
      batch.entries.push_back(std::move(e));
    }
  }
  return batch;
}

namespace {

json batch_to_json(const ExperienceBatch& b) {
  json out;
  out["instances"] = json::array();
  for (const Instance& inst : b.instances) {
    out["instances"].push_back(json::parse(instance_to_json(inst)));
  }
  out["entries"] = json::array();
  for (const Experience& e : b.entries) {
    json je;
    je["ref"] = e.instance_ref;
    je["visited"] = e.visited;
    je["current"] = e.current;
    je["remaining"] = e.remaining;
    je["probs"] = std::vector<double>(e.behavior.probs.data(),
                                      e.behavior.probs.data() + e.behavior.probs.size());
    je["mask"] = e.behavior.mask;
    out["entries"].push_back(std::move(je));
  }
  return out;
}

ExperienceBatch batch_from_json(const json& jb) {
  ExperienceBatch b;
  for (const json& ji : jb.at("instances")) {
    b.instances.push_back(instance_from_json(ji.dump()));
  }
  for (const json& je : jb.at("entries")) {
    Experience e;
    e.instance_ref = je.at("ref").get<int>();
    e.visited = je.at("visited").get<std::vector<std::uint8_t>>();
    e.current = je.at("current").get<int>();
    e.remaining = je.at("remaining").get<double>();
    auto probs = je.at("probs").get<std::vector<double>>();
    e.behavior.probs = Eigen::Map<Eigen::VectorXd>(probs.data(),
                                                   static_cast<Eigen::Index>(probs.size()));
    e.behavior.mask = je.at("mask").get<std::vector<std::uint8_t>>();
    if (e.instance_ref < 0 || e.instance_ref >= static_cast<int>(b.instances.size())) {
      throw data_error("experience refers to a missing instance");
    }
    b.entries.push_back(std::move(e));
  }
  return b;
}

}  // namespace

std::string ReservoirBuffer::to_json() const {
  json out;
  out["version"] = 1;
  out["capacity"] = capacity_;
  out["offered"] = offered_;
  out["batches"] = json::array();
  for (const ExperienceBatch& b : entries_) out["batches"].push_back(batch_to_json(b));
  return out.dump();
}

ReservoirBuffer ReservoirBuffer::from_json(const std::string& text) {
  try {
    json in = json::parse(text);
    if (in.at("version").get<int>() != 1) throw data_error("unknown buffer version");
    ReservoirBuffer buf(in.at("capacity").get<int>());
    buf.offered_ = in.at("offered").get<long long>();
    for (const json& jb : in.at("batches")) buf.entries_.push_back(batch_from_json(jb));
    if (static_cast<int>(buf.entries_.size()) > buf.capacity_) {
      throw data_error("buffer file holds more batches than its capacity");
    }
    return buf;
  } catch (const json::exception& e) {
    throw data_error(std::string("bad buffer json: ") + e.what());
  }
}

void ReservoirBuffer::save(const std::string& path) const {
  write_text_atomic(path, to_json());
}

ReservoirBuffer ReservoirBuffer::load(const std::string& path) {
  return from_json(read_text(path));
}

}  // namespace llrbc
