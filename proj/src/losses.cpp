#include "llrbc/losses.hpp"

#include <cmath>

#include "llrbc/env.hpp"

namespace llrbc {

namespace {
constexpr double kProbFloor = 1e-12;
}

Eigen::VectorXd instance_advantages(const RolloutResult& rb) {
  int B = static_cast<int>(rb.instances.size());
  int N = rb.starts;
  Eigen::VectorXd adv(static_cast<Eigen::Index>(B) * N);
  for (int i = 0; i < B; ++i) {
    double mean = 0;
    for (int j = 0; j < N; ++j) mean += rb.trajectories[static_cast<std::size_t>(i * N + j)].reward();
    mean /= N;
    for (int j = 0; j < N; ++j) {
      adv(static_cast<Eigen::Index>(i) * N + j) =
          rb.trajectories[static_cast<std::size_t>(i * N + j)].reward() - mean;
    }
  }
  return adv;
}

double drl_loss(const RolloutResult& rb) {
  int B = static_cast<int>(rb.instances.size());
  int N = rb.starts;
  Eigen::VectorXd adv = instance_advantages(rb);
  double acc = 0;
  for (int r = 0; r < B * N; ++r) {
    double logp_sum = 0;
    for (double lp : rb.trajectories[static_cast<std::size_t>(r)].logp) logp_sum += lp;
    acc += adv(r) * logp_sum;
  }
  return -acc / (static_cast<double>(B) * N);
}

void add_drl_grad(const RolloutResult& rb, std::vector<Eigen::MatrixXd>& dprobs) {
  int B = static_cast<int>(rb.instances.size());
  int N = rb.starts;
  if (dprobs.size() != rb.steps.size()) throw data_error("dprobs/steps length mismatch");
  Eigen::VectorXd adv = instance_advantages(rb);
  double scale = -1.0 / (static_cast<double>(B) * N);
  for (std::size_t t = 0; t < rb.steps.size(); ++t) {
    const StepAct& sa = rb.steps[t];
    for (int r = 0; r < B * N; ++r) {
      if (!rb.active[t][static_cast<std::size_t>(r)]) continue;
      int a = rb.trajectories[static_cast<std::size_t>(r)].actions[t];
      double p = sa.probs(r, a);
      // log p was floored at 1e-12 when recorded; below the floor it is constant.
      if (p > kProbFloor) dprobs[t](r, a) += scale * adv(r) / p;
    }
  }
}

double divergence_term(const Eigen::VectorXd& p_theta, const Eigen::VectorXd& p_buffered,
                       const std::vector<std::uint8_t>& mask, DivergenceMode mode) {
  if (p_theta.size() != p_buffered.size() ||
      static_cast<std::size_t>(p_theta.size()) != mask.size()) {
    throw data_error("divergence operands disagree on action count");
  }
  double acc = 0;
  for (Eigen::Index a = 0; a < p_theta.size(); ++a) {
    if (!mask[static_cast<std::size_t>(a)]) continue;
    double q = std::max(p_theta(a), kProbFloor);
    double p = std::max(p_buffered(a), kProbFloor);
    acc += (mode == DivergenceMode::reverse_kld) ? q * std::log(q / p) : p * std::log(p / q);
  }
  return acc;
}

namespace {

// Feasibility of a buffered state under the current environment rules.
std::vector<std::uint8_t> recomputed_mask(const Instance& inst, const Experience& e) {
  ConstructionState s;
  s.instance = &inst;
  s.visited = e.visited;
  s.current = e.current;
  s.remaining = e.remaining;
  s.visited_count = 0;
  for (std::uint8_t v : s.visited) s.visited_count += v ? 1 : 0;
  return feasible_actions(s);
}

}  // namespace

double bc_loss(const Policy& p, const std::vector<const ExperienceBatch*>& batches,
               DivergenceMode mode, bool uniform_weights, Grad* g) {
  // Joint weight normalization across every entry of every sampled batch.
  std::vector<double> raw;
  for (const ExperienceBatch* b : batches) {
    for (const Experience& e : b->entries) {
      raw.push_back(uniform_weights ? 1.0 : confidence_weight(e.behavior));
    }
  }
  if (raw.empty()) return 0.0;
  std::vector<double> w = normalize_weights(raw);

  Net net(p);
  bool record = g != nullptr;
  double loss = 0;
  std::size_t w_at = 0;
  for (const ExperienceBatch* b : batches) {
    if (b->entries.empty()) continue;
    std::vector<const Instance*> ptrs;
    ptrs.reserve(b->instances.size());
    for (const Instance& inst : b->instances) ptrs.push_back(&inst);
    int T = b->instances.front().action_count();
    int R = static_cast<int>(b->entries.size());

    std::vector<DecodeRow> rows(static_cast<std::size_t>(R));
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(R) * T);
    for (int i = 0; i < R; ++i) {
      const Experience& e = b->entries[static_cast<std::size_t>(i)];
      const Instance& inst = b->instances[static_cast<std::size_t>(e.instance_ref)];
      if (e.behavior.probs.size() != T || static_cast<int>(e.behavior.mask.size()) != T) {
        throw data_error("buffered behavior has the wrong action count");
      }
      if (recomputed_mask(inst, e) != e.behavior.mask) {
        throw data_error("buffered mask no longer matches the feasible action set");
      }
      rows[static_cast<std::size_t>(i)].instance = e.instance_ref;
      rows[static_cast<std::size_t>(i)].cur_token = e.current;
      rows[static_cast<std::size_t>(i)].cap_frac =
          inst.kind == ProblemKind::cvrp ? e.remaining / inst.capacity : 0.0;
      std::copy(e.behavior.mask.begin(), e.behavior.mask.end(),
                mask.begin() + static_cast<std::ptrdiff_t>(i) * T);
    }

    Encode enc = net.encode(ptrs, record);
    StepAct step = net.decode_step(enc, std::move(rows), std::move(mask), record);

    Eigen::MatrixXd dP;
    if (record) dP = Eigen::MatrixXd::Zero(R, T);
    for (int i = 0; i < R; ++i) {
      const Experience& e = b->entries[static_cast<std::size_t>(i)];
      double wi = w[w_at++];
      loss += wi * divergence_term(step.probs.row(i).transpose(), e.behavior.probs,
                                   e.behavior.mask, mode);
      if (!record) continue;
      for (int a = 0; a < T; ++a) {
        if (!e.behavior.mask[static_cast<std::size_t>(a)]) continue;
        double q = step.probs(i, a);
        double pb = std::max(e.behavior.probs(a), kProbFloor);
        if (q <= kProbFloor) continue;  // floored region, locally constant
        if (mode == DivergenceMode::reverse_kld) {
          dP(i, a) = wi * (std::log(q / pb) + 1.0);
        } else {
          dP(i, a) = -wi * pb / q;
        }
      }
    }
    if (record) {
      std::vector<StepAct> steps;
      steps.push_back(std::move(step));
      std::vector<Eigen::MatrixXd> dprobs;
      dprobs.push_back(std::move(dP));
      net.backward(enc, steps, dprobs, *g);
    }
  }
  return loss;
}

double ewc_penalty(const Policy& p, const std::vector<EwcAnchor>& anchors, double lambda) {
  double acc = 0;
  for (const EwcAnchor& a : anchors) {
    if (a.fisher.size() != p.param_count() || a.theta_star.size() != p.param_count()) {
      throw data_error("anchor shape does not match the parameter vector");
    }
    acc += 0.5 * lambda *
           (a.fisher.array() * (p.theta() - a.theta_star).array().square()).sum();
  }
  return acc;
}

void add_ewc_grad(const Policy& p, const std::vector<EwcAnchor>& anchors, double lambda,
                  Grad& g) {
  for (const EwcAnchor& a : anchors) {
    if (a.fisher.size() != p.param_count() || a.theta_star.size() != p.param_count()) {
      throw data_error("anchor shape does not match the parameter vector");
    }
    g.vec().array() += lambda * a.fisher.array() * (p.theta() - a.theta_star).array();
  }
}

Eigen::VectorXd fisher_estimate(const Policy& p,
                                const std::vector<const Instance*>& instances, int starts,
                                Rng& rng) {
  RolloutResult rb = rollout(p, instances, DecodeMode::sample, starts, &rng, true);
  Eigen::VectorXd adv = instance_advantages(rb);
  int B = static_cast<int>(rb.instances.size());
  int N = rb.starts;
  Net net(p);
  Eigen::VectorXd fisher = Eigen::VectorXd::Zero(p.param_count());
  Grad g(p);
  // One backward per trajectory: the squared gradients cannot be pooled.
  for (int r = 0; r < B * N; ++r) {
    const Trajectory& traj = rb.trajectories[static_cast<std::size_t>(r)];
    std::vector<Eigen::MatrixXd> dprobs;
    dprobs.reserve(rb.steps.size());
    for (const StepAct& sa : rb.steps) {
      dprobs.emplace_back(Eigen::MatrixXd::Zero(sa.probs.rows(), sa.probs.cols()));
    }
    for (std::size_t t = 0; t < rb.steps.size(); ++t) {
      if (!rb.active[t][static_cast<std::size_t>(r)]) continue;
      int a = traj.actions[t];
      double prob = rb.steps[t].probs(r, a);
      if (prob > kProbFloor) dprobs[t](r, a) = -adv(r) / prob;
    }
    g.zero();
    net.backward(rb.enc, rb.steps, dprobs, g);
    fisher.array() += g.vec().array().square();
  }
  fisher /= static_cast<double>(B) * N;
  return fisher;
}

}  // namespace llrbc
