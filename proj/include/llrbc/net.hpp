#pragma once

#include <Eigen/Dense>
#include <vector>

#include "llrbc/env.hpp"
#include "llrbc/policy.hpp"

// The policy network: an attention encoder over instance nodes and a single-head
// pointer decoder with tanh logit clipping. Instances of equal token count are
// stacked into one activation workspace so the hot matrix products run over
// (batch * tokens)-row operands. Backward passes are written out explicitly and are
// validated against central finite differences in the test suite.

namespace llrbc {

// One decode-step row: a trajectory (training/eval) or a buffered experience (BC).
struct DecodeRow {
  int instance = 0;    // index within the encode batch
  int cur_token = 0;   // token index within the instance (CVRP depot = n)
  double cap_frac = 0; // CVRP: remaining / capacity
};

struct LayerAct {
  Eigen::MatrixXd in;                 // (B*T) x D layer input
  Eigen::MatrixXd q, k, v;            // projections
  std::vector<Eigen::MatrixXd> attn;  // B*heads row-softmax matrices, T x T
  Eigen::MatrixXd attn_cat;           // concatenated head outputs
  Eigen::MatrixXd z1, y1;             // residual sum and its layer norm
  Eigen::VectorXd ln1_mu, ln1_is;
  Eigen::MatrixXd ff_pre;             // feed-forward pre-activation
  Eigen::MatrixXd z2;                 // second residual sum
  Eigen::VectorXd ln2_mu, ln2_is;
};

struct Encode {
  int B = 0, T = 0;
  std::vector<const Instance*> instances;
  Eigen::MatrixXd X;      // (B*T) x in_dim input features
  Eigen::MatrixXd H;      // (B*T) x D final embeddings
  Eigen::MatrixXd graph;  // B x D per-instance token means
  Eigen::MatrixXd K;      // (B*T) x D decoder keys
  std::vector<LayerAct> acts;  // present only when recorded
  bool recorded = false;
};

struct StepAct {
  std::vector<DecodeRow> rows;
  std::vector<std::uint8_t> mask;  // R*T, row-major feasibility at decision time
  Eigen::MatrixXd ctx;             // R x context_dim
  Eigen::MatrixXd q;               // R x D
  Eigen::MatrixXd t;               // R x T, tanh of scaled compatibilities
  Eigen::MatrixXd probs;           // R x T, masked softmax
};

class Net {
 public:
  explicit Net(const Policy& p) : p_(p) {}

  // All instances must share the policy's problem kind and one token count.
  // record=true stashes activations for a later backward().
  Encode encode(std::vector<const Instance*> instances, bool record) const;

  // Rows must be grouped by instance (contiguous runs). The mask is row-major R x T.
  StepAct decode_step(const Encode& enc, std::vector<DecodeRow> rows,
                      std::vector<std::uint8_t> mask, bool record) const;

  // Accumulates d(loss)/d(theta) into g given d(loss)/d(probs) for every recorded
  // decode step. dprobs[s] has the shape of steps[s].probs.
  void backward(const Encode& enc, const std::vector<StepAct>& steps,
                const std::vector<Eigen::MatrixXd>& dprobs, Grad& g) const;

  const Policy& policy() const { return p_; }

 private:
  const Policy& p_;
};

// Single-instance embedding, one row per token.
Eigen::MatrixXd encode_instance(const Policy& p, const Instance& inst);

// The policy's masked action distribution at one state.
Behavior evaluate_behavior(const Policy& p, const ConstructionState& state);

}  // namespace llrbc
