#include "llrbc/rollout.hpp"

#include <cmath>
#include <limits>

namespace llrbc {

namespace {

constexpr double kProbFloor = 1e-12;

int sample_from_row(const Eigen::MatrixXd& probs, const std::vector<std::uint8_t>& mask,
                    int r, int t_count, double u) {
  double acc = 0;
  int last_feasible = -1;
  for (int c = 0; c < t_count; ++c) {
    if (!mask[size_t(r) * t_count + c]) continue;
    last_feasible = c;
    acc += probs(r, c);
    if (u < acc) return c;
  }
  return last_feasible;  // u landed in the rounding tail
}

int argmax_row(const Eigen::MatrixXd& probs, int r) {
  int best = 0;
  double best_v = -1;
  for (int c = 0; c < probs.cols(); ++c) {
    if (probs(r, c) > best_v) {
      best_v = probs(r, c);
      best = c;
    }
  }
  return best;
}

RolloutResult run_rollout(const Policy& p, const std::vector<const Instance*>& instances,
                          DecodeMode mode, int starts, Rng* rng, bool record,
                          const std::vector<Trajectory>* forced) {
  if (instances.empty()) throw data_error("rollout needs instances");
  const Instance& first = *instances[0];
  const int n = first.n();
  if (starts < 1 || starts > n) {
    throw data_error("starts must lie in [1, n]; got " + std::to_string(starts));
  }
  if (mode == DecodeMode::sample && rng == nullptr && forced == nullptr) {
    throw data_error("sampling rollout needs a random stream");
  }
  const bool cvrp = first.kind == ProblemKind::cvrp;
  const int B = static_cast<int>(instances.size());
  const int R = B * starts;

  RolloutResult out;
  out.instances = instances;
  out.starts = starts;
  Net net(p);
  out.enc = net.encode(instances, record);
  const int T = out.enc.T;

  std::vector<ConstructionState> states;
  states.reserve(R);
  out.trajectories.resize(R);
  for (int i = 0; i < B; ++i) {
    for (int j = 0; j < starts; ++j) {
      ConstructionState s = reset(*instances[i], j);
      if (cvrp) s = step(s, j);  // forced first customer, not a decision
      out.trajectories[size_t(i) * starts + j].start_node = j;
      states.push_back(std::move(s));
    }
  }

  const int max_steps = cvrp ? 2 * n + 2 : n - 1;
  for (int step_idx = 0; step_idx < max_steps; ++step_idx) {
    bool any_open = false;
    for (const auto& s : states) {
      if (!s.terminal()) {
        any_open = true;
        break;
      }
    }
    if (!any_open) break;

    std::vector<DecodeRow> rows(R);
    std::vector<std::uint8_t> mask(size_t(R) * T, 0);
    std::vector<std::uint8_t> active(R, 0);
    for (int r = 0; r < R; ++r) {
      const ConstructionState& s = states[r];
      DecodeRow& row = rows[r];
      row.instance = r / starts;
      if (s.terminal()) {
        row.cur_token = first.depot_index();
        row.cap_frac = 1.0;
        mask[size_t(r) * T + first.depot_index()] = 1;  // padding: depot only
      } else {
        active[r] = 1;
        row.cur_token = s.current;
        row.cap_frac = cvrp ? s.remaining / instances[row.instance]->capacity : 0.0;
        auto feas = feasible_actions(s);
        std::copy(feas.begin(), feas.end(), mask.begin() + size_t(r) * T);
      }
    }

    StepAct step_act = net.decode_step(out.enc, std::move(rows), std::move(mask), record);

    for (int r = 0; r < R; ++r) {
      int chosen;
      if (forced != nullptr) {
        const auto& traj = (*forced)[r];
        if (!active[r]) continue;
        if (step_idx >= static_cast<int>(traj.actions.size())) {
          throw data_error("replay ran out of recorded actions");
        }
        chosen = traj.actions[step_idx];
        if (!step_act.mask[size_t(r) * T + chosen]) {
          throw data_error("replayed action is infeasible under the current state");
        }
      } else if (mode == DecodeMode::sample) {
        double u = rng->uniform();  // every row draws, keeping consumption shape-stable
        if (!active[r]) continue;
        chosen = sample_from_row(step_act.probs, step_act.mask, r, T, u);
      } else {
        if (!active[r]) continue;
        chosen = argmax_row(step_act.probs, r);
      }
      Trajectory& traj = out.trajectories[r];
      traj.actions.push_back(chosen);
      traj.logp.push_back(std::log(std::max(step_act.probs(r, chosen), kProbFloor)));
      states[r] = step(states[r], chosen);
    }

    // Only training and replay paths need the step trail; evaluation at benchmark
    // scale cannot afford R x T probabilities per step.
    if (record) {
      out.active.push_back(std::move(active));
      out.steps.push_back(std::move(step_act));
    }
  }

  for (int r = 0; r < R; ++r) {
    if (!states[r].terminal()) throw data_error("rollout failed to terminate");
    Trajectory& traj = out.trajectories[r];
    traj.route = states[r].route;
    traj.total_length = tour_length(*instances[r / starts], traj.route);
  }
  return out;
}

}  // namespace

RolloutResult rollout(const Policy& p, const std::vector<const Instance*>& instances,
                      DecodeMode mode, int starts, Rng* rng, bool record) {
  return run_rollout(p, instances, mode, starts, rng, record, nullptr);
}

RolloutResult replay_rollout(const Policy& p, const std::vector<const Instance*>& instances,
                             const std::vector<Trajectory>& trajectories, int starts,
                             bool record) {
  if (trajectories.size() != instances.size() * size_t(starts)) {
    throw data_error("replay trajectory count mismatch");
  }
  return run_rollout(p, instances, DecodeMode::sample, starts, nullptr, record,
                     &trajectories);
}

EvalRoute best_greedy_route(const Policy& p, const Instance& inst, int starts) {
  if (starts <= 0) starts = inst.n();
  RolloutResult rb = rollout(p, {&inst}, DecodeMode::greedy, starts, nullptr, false);
  EvalRoute best;
  best.length = std::numeric_limits<double>::infinity();
  for (const Trajectory& t : rb.trajectories) {
    if (t.total_length < best.length) {
      best.length = t.total_length;
      best.route = t.route;
    }
  }
  return best;
}

std::vector<double> evaluate_lengths(const Policy& p, const std::vector<Instance>& set,
                                     int starts) {
  if (set.empty()) throw data_error("empty evaluation set");
  std::vector<const Instance*> ptrs;
  ptrs.reserve(set.size());
  for (const Instance& inst : set) ptrs.push_back(&inst);
  int s = starts <= 0 ? set[0].n() : starts;
  RolloutResult rb = rollout(p, ptrs, DecodeMode::greedy, s, nullptr, false);
  std::vector<double> lengths(set.size(), std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < set.size(); ++i) {
    for (int j = 0; j < s; ++j) {
      lengths[i] = std::min(lengths[i], rb.trajectories[i * s + j].total_length);
    }
  }
  return lengths;
}

}  // namespace llrbc
