#pragma once

#include <vector>

#include "llrbc/buffer.hpp"
#include "llrbc/net.hpp"
#include "llrbc/rollout.hpp"

namespace llrbc {

enum class DivergenceMode { reverse_kld, kld };

// Reward minus the instance's mean reward across its starts, one entry per row.
// Advantages are treated as constants by every gradient below.
Eigen::VectorXd instance_advantages(const RolloutResult& rb);

// Multi-start policy-gradient surrogate, -(1/(B*N)) sum_r A_r sum_t log p_t, from the
// rollout's stored log-probabilities. With trajectories held fixed (replay_rollout)
// this is a pure function of theta, which is what the finite-difference tests drive.
double drl_loss(const RolloutResult& rb);

// Accumulates the surrogate's d/d(probs) into dprobs, one matrix per decode step,
// shaped like rb.steps[s].probs and zero-initialized by the caller.
void add_drl_grad(const RolloutResult& rb, std::vector<Eigen::MatrixXd>& dprobs);

// One experience's divergence over its unmasked actions, probabilities floored at
// 1e-12 before any ratio. reverse_kld: sum q log(q/p); kld: sum p log(p/q), where q is
// the current policy and p the buffered behavior.
double divergence_term(const Eigen::VectorXd& p_theta, const Eigen::VectorXd& p_buffered,
                       const std::vector<std::uint8_t>& mask, DivergenceMode mode);

// Behavior-consolidation loss over sampled batches: the weighted sum of divergence
// terms, weights normalized jointly across every entry of every sampled batch
// (confidence weights unless uniform_weights). Recomputes each buffered state's
// feasible set and rejects entries whose stored mask no longer matches. When g is
// non-null the gradient with respect to theta is accumulated into it.
double bc_loss(const Policy& p, const std::vector<const ExperienceBatch*>& batches,
               DivergenceMode mode, bool uniform_weights, Grad* g);

struct EwcAnchor {
  Eigen::VectorXd fisher;      // entrywise nonnegative, one entry per parameter
  Eigen::VectorXd theta_star;  // parameters captured when the anchor's task finished
};

// sum over anchors of (lambda/2) * sum_i F_i (theta_i - theta*_i)^2.
double ewc_penalty(const Policy& p, const std::vector<EwcAnchor>& anchors, double lambda);
void add_ewc_grad(const Policy& p, const std::vector<EwcAnchor>& anchors, double lambda,
                  Grad& g);

// Diagonal empirical Fisher: mean over sampled trajectories of the squared gradient
// of the trajectory's advantage-weighted log-likelihood term.
Eigen::VectorXd fisher_estimate(const Policy& p,
                                const std::vector<const Instance*>& instances, int starts,
                                Rng& rng);

}  // namespace llrbc
