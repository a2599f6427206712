#include "llrbc/net.hpp"

#include <cmath>

namespace llrbc {

namespace {

constexpr double kLnEps = 1e-10;

struct LnOut {
  Eigen::MatrixXd y;
  Eigen::VectorXd mu, is;
};

LnOut layer_norm(const Eigen::MatrixXd& x, const Eigen::Map<const Eigen::MatrixXd>& g,
                 const Eigen::Map<const Eigen::MatrixXd>& b) {
  LnOut out;
  const Eigen::Index rows = x.rows(), cols = x.cols();
  out.mu = x.rowwise().mean();
  Eigen::MatrixXd centered = x.colwise() - out.mu;
  out.is = (centered.array().square().rowwise().mean() + kLnEps).sqrt().inverse();
  out.y = (centered.array().colwise() * out.is.array()).matrix();
  out.y = (out.y.array().rowwise() * g.row(0).array()).matrix();
  out.y.rowwise() += b.row(0);
  (void)rows;
  (void)cols;
  return out;
}

// dz for z -> layer_norm(z), plus parameter gradient accumulation.
Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy, const Eigen::MatrixXd& z,
                                    const Eigen::VectorXd& mu, const Eigen::VectorXd& is,
                                    const Eigen::Map<const Eigen::MatrixXd>& g,
                                    Eigen::Map<Eigen::MatrixXd> dg,
                                    Eigen::Map<Eigen::MatrixXd> db) {
  Eigen::MatrixXd xhat = ((z.colwise() - mu).array().colwise() * is.array()).matrix();
  dg.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  db.row(0) += dy.colwise().sum();
  Eigen::MatrixXd dyg = (dy.array().rowwise() * g.row(0).array()).matrix();
  Eigen::VectorXd m1 = dyg.rowwise().mean();
  Eigen::VectorXd m2 = (dyg.array() * xhat.array()).rowwise().mean();
  Eigen::MatrixXd dz = dyg;
  dz.colwise() -= m1;
  dz -= (xhat.array().colwise() * m2.array()).matrix();
  return (dz.array().colwise() * is.array()).matrix();
}

// In-place row softmax of P(= logits on entry) restricted to unmasked entries.
void masked_row_softmax(Eigen::MatrixXd& p, const std::vector<std::uint8_t>& mask) {
  const Eigen::Index rows = p.rows(), cols = p.cols();
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::uint8_t* m = mask.data() + r * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (m[c]) mx = std::max(mx, p(r, c));
    }
    if (!std::isfinite(mx)) throw data_error("decode row has no feasible action");
    double sum = 0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      double e = m[c] ? std::exp(p(r, c) - mx) : 0.0;
      p(r, c) = e;
      sum += e;
    }
    p.row(r) /= sum;
  }
}

// Row softmax jacobian application: dU = P .* (dP - rowsum(dP .* P)).
Eigen::MatrixXd softmax_backward(const Eigen::MatrixXd& p, const Eigen::MatrixXd& dp) {
  Eigen::VectorXd dot = (dp.array() * p.array()).rowwise().sum();
  return (p.array() * (dp.colwise() - dot).array()).matrix();
}

struct Run {
  int begin = 0, end = 0, instance = 0;
};

std::vector<Run> instance_runs(const std::vector<DecodeRow>& rows) {
  std::vector<Run> runs;
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    if (!runs.empty() && runs.back().instance == rows[r].instance) {
      runs.back().end = r + 1;
    } else {
      runs.push_back({r, r + 1, rows[r].instance});
    }
  }
  return runs;
}

}  // namespace

Encode Net::encode(std::vector<const Instance*> instances, bool record) const {
  if (instances.empty()) throw data_error("encode needs at least one instance");
  const ModelConfig& cfg = p_.config();
  Encode enc;
  enc.B = static_cast<int>(instances.size());
  const bool cvrp = cfg.kind == ProblemKind::cvrp;
  const int n = instances[0]->n();
  enc.T = cvrp ? n + 1 : n;
  for (const Instance* inst : instances) {
    if (inst->kind != cfg.kind) throw data_error("instance kind does not match the policy");
    if (inst->n() != n) throw data_error("encode batch mixes node counts");
  }
  enc.instances = std::move(instances);
  enc.recorded = record;

  const int D = cfg.embed_dim;
  const int BT = enc.B * enc.T;

  // Input features and lift. CVRP stacks customers and depot rows through separate
  // linear maps.
  Eigen::MatrixXd h;
  if (!cvrp) {
    enc.X.resize(BT, 2);
    for (int i = 0; i < enc.B; ++i) {
      enc.X.middleRows(Eigen::Index(i) * enc.T, n) = enc.instances[i]->coords;
    }
    h = enc.X * p_.mat("embed.node.w");
    h.rowwise() += p_.mat("embed.node.b").row(0);
  } else {
    enc.X.resize(BT, 3);
    Eigen::MatrixXd xc(enc.B * n, 3);
    Eigen::MatrixXd xd(enc.B, 2);
    for (int i = 0; i < enc.B; ++i) {
      const Instance& inst = *enc.instances[i];
      xc.block(Eigen::Index(i) * n, 0, n, 2) = inst.coords;
      xc.block(Eigen::Index(i) * n, 2, n, 1) = inst.demands / inst.capacity;
      xd.row(i) = inst.depot;
      enc.X.block(Eigen::Index(i) * enc.T, 0, n, 3) = xc.middleRows(Eigen::Index(i) * n, n);
      enc.X(Eigen::Index(i) * enc.T + n, 0) = inst.depot(0);
      enc.X(Eigen::Index(i) * enc.T + n, 1) = inst.depot(1);
      enc.X(Eigen::Index(i) * enc.T + n, 2) = 0;
    }
    Eigen::MatrixXd hc = xc * p_.mat("embed.customer.w");
    hc.rowwise() += p_.mat("embed.customer.b").row(0);
    Eigen::MatrixXd hd = xd * p_.mat("embed.depot.w");
    hd.rowwise() += p_.mat("embed.depot.b").row(0);
    h.resize(BT, D);
    for (int i = 0; i < enc.B; ++i) {
      h.middleRows(Eigen::Index(i) * enc.T, n) = hc.middleRows(Eigen::Index(i) * n, n);
      h.row(Eigen::Index(i) * enc.T + n) = hd.row(i);
    }
  }

  const int heads = cfg.heads;
  const int dh = D / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (record) enc.acts.resize(cfg.layers);

  for (int l = 0; l < cfg.layers; ++l) {
    std::string pre = "enc" + std::to_string(l) + ".";
    Eigen::MatrixXd q = h * p_.mat(pre + "attn.wq");
    Eigen::MatrixXd k = h * p_.mat(pre + "attn.wk");
    Eigen::MatrixXd v = h * p_.mat(pre + "attn.wv");
    Eigen::MatrixXd cat(BT, D);
    std::vector<Eigen::MatrixXd> attn;
    if (record) attn.reserve(size_t(enc.B) * heads);
    for (int i = 0; i < enc.B; ++i) {
      const Eigen::Index r0 = Eigen::Index(i) * enc.T;
      for (int hd_i = 0; hd_i < heads; ++hd_i) {
        const Eigen::Index c0 = Eigen::Index(hd_i) * dh;
        Eigen::MatrixXd s = q.block(r0, c0, enc.T, dh) * k.block(r0, c0, enc.T, dh).transpose() * scale;
        // plain row softmax (encoder attends over all tokens)
        for (Eigen::Index rr = 0; rr < s.rows(); ++rr) {
          double mx = s.row(rr).maxCoeff();
          s.row(rr) = (s.row(rr).array() - mx).exp();
          s.row(rr) /= s.row(rr).sum();
        }
        cat.block(r0, c0, enc.T, dh) = s * v.block(r0, c0, enc.T, dh);
        if (record) attn.push_back(std::move(s));
      }
    }
    Eigen::MatrixXd z1 = h + cat * p_.mat(pre + "attn.wo");
    LnOut n1 = layer_norm(z1, p_.mat(pre + "ln1.g"), p_.mat(pre + "ln1.b"));
    Eigen::MatrixXd ff_pre = n1.y * p_.mat(pre + "ff.w1");
    ff_pre.rowwise() += p_.mat(pre + "ff.b1").row(0);
    Eigen::MatrixXd z2 = n1.y + ff_pre.cwiseMax(0.0) * p_.mat(pre + "ff.w2");
    z2.rowwise() += p_.mat(pre + "ff.b2").row(0);
    LnOut n2 = layer_norm(z2, p_.mat(pre + "ln2.g"), p_.mat(pre + "ln2.b"));

    if (record) {
      LayerAct& act = enc.acts[l];
      act.in = std::move(h);
      act.q = std::move(q);
      act.k = std::move(k);
      act.v = std::move(v);
      act.attn = std::move(attn);
      act.attn_cat = std::move(cat);
      act.z1 = std::move(z1);
      act.y1 = std::move(n1.y);
      act.ln1_mu = std::move(n1.mu);
      act.ln1_is = std::move(n1.is);
      act.ff_pre = std::move(ff_pre);
      act.z2 = std::move(z2);
      act.ln2_mu = std::move(n2.mu);
      act.ln2_is = std::move(n2.is);
    }
    h = std::move(n2.y);
  }

  enc.H = std::move(h);
  enc.graph.resize(enc.B, D);
  for (int i = 0; i < enc.B; ++i) {
    enc.graph.row(i) = enc.H.middleRows(Eigen::Index(i) * enc.T, enc.T).colwise().mean();
  }
  enc.K = enc.H * p_.mat("dec.wk");
  return enc;
}

StepAct Net::decode_step(const Encode& enc, std::vector<DecodeRow> rows,
                         std::vector<std::uint8_t> mask, bool record) const {
  const ModelConfig& cfg = p_.config();
  const int D = cfg.embed_dim;
  const int R = static_cast<int>(rows.size());
  if (R == 0) throw data_error("decode_step needs rows");
  if (mask.size() != size_t(R) * enc.T) throw data_error("decode mask size mismatch");

  StepAct step;
  step.ctx.resize(R, cfg.context_dim());
  for (int r = 0; r < R; ++r) {
    const DecodeRow& row = rows[r];
    step.ctx.block(r, 0, 1, D) = enc.graph.row(row.instance);
    step.ctx.block(r, D, 1, D) = enc.H.row(Eigen::Index(row.instance) * enc.T + row.cur_token);
    if (cfg.kind == ProblemKind::cvrp) step.ctx(r, 2 * D) = row.cap_frac;
  }
  Eigen::MatrixXd q = step.ctx * p_.mat("dec.wctx");
  q.rowwise() += p_.mat("dec.bctx").row(0);

  const double scale = 1.0 / std::sqrt(static_cast<double>(D));
  Eigen::MatrixXd t(R, enc.T);
  for (const Run& run : instance_runs(rows)) {
    t.middleRows(run.begin, run.end - run.begin) =
        q.middleRows(run.begin, run.end - run.begin) *
        enc.K.middleRows(Eigen::Index(run.instance) * enc.T, enc.T).transpose() * scale;
  }
  t = t.array().tanh();
  Eigen::MatrixXd probs = cfg.clip * t;
  masked_row_softmax(probs, mask);

  step.rows = std::move(rows);
  step.mask = std::move(mask);
  step.q = std::move(q);
  step.t = std::move(t);
  step.probs = std::move(probs);
  if (!record) {
    step.ctx.resize(0, 0);
    step.q.resize(0, 0);
    step.t.resize(0, 0);
  }
  return step;
}

void Net::backward(const Encode& enc, const std::vector<StepAct>& steps,
                   const std::vector<Eigen::MatrixXd>& dprobs, Grad& g) const {
  if (!enc.recorded) throw data_error("backward needs a recorded encode");
  if (steps.size() != dprobs.size()) throw data_error("dprobs count mismatch");
  const ModelConfig& cfg = p_.config();
  const int D = cfg.embed_dim;
  const int BT = enc.B * enc.T;
  const double dec_scale = 1.0 / std::sqrt(static_cast<double>(D));

  Eigen::MatrixXd dH = Eigen::MatrixXd::Zero(BT, D);
  Eigen::MatrixXd dK = Eigen::MatrixXd::Zero(BT, D);
  Eigen::MatrixXd dgraph = Eigen::MatrixXd::Zero(enc.B, D);

  auto dwctx = g.mat("dec.wctx");
  auto dbctx = g.mat("dec.bctx");
  for (size_t s = 0; s < steps.size(); ++s) {
    const StepAct& step = steps[s];
    if (step.ctx.size() == 0) throw data_error("backward on an unrecorded decode step");
    const int R = static_cast<int>(step.rows.size());
    Eigen::MatrixXd du = softmax_backward(step.probs, dprobs[s]);
    Eigen::MatrixXd ds =
        (du.array() * (1.0 - step.t.array().square()) * cfg.clip * dec_scale).matrix();
    Eigen::MatrixXd dq(R, D);
    for (const Run& run : instance_runs(step.rows)) {
      const Eigen::Index r0 = Eigen::Index(run.instance) * enc.T;
      auto ds_block = ds.middleRows(run.begin, run.end - run.begin);
      dq.middleRows(run.begin, run.end - run.begin) = ds_block * enc.K.middleRows(r0, enc.T);
      dK.middleRows(r0, enc.T) +=
          ds_block.transpose() * step.q.middleRows(run.begin, run.end - run.begin);
    }
    dwctx += step.ctx.transpose() * dq;
    dbctx.row(0) += dq.colwise().sum();
    Eigen::MatrixXd dctx = dq * p_.mat("dec.wctx").transpose();
    for (int r = 0; r < R; ++r) {
      const DecodeRow& row = step.rows[r];
      dgraph.row(row.instance) += dctx.block(r, 0, 1, D);
      dH.row(Eigen::Index(row.instance) * enc.T + row.cur_token) += dctx.block(r, D, 1, D);
    }
  }

  g.mat("dec.wk") += enc.H.transpose() * dK;
  dH += dK * p_.mat("dec.wk").transpose();
  for (int i = 0; i < enc.B; ++i) {
    dH.middleRows(Eigen::Index(i) * enc.T, enc.T).rowwise() +=
        dgraph.row(i) / static_cast<double>(enc.T);
  }

  const int heads = cfg.heads;
  const int dh = D / heads;
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Eigen::MatrixXd dy = std::move(dH);
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const LayerAct& act = enc.acts[l];
    std::string pre = "enc" + std::to_string(l) + ".";

    Eigen::MatrixXd dz2 = layer_norm_backward(dy, act.z2, act.ln2_mu, act.ln2_is,
                                              p_.mat(pre + "ln2.g"), g.mat(pre + "ln2.g"),
                                              g.mat(pre + "ln2.b"));
    Eigen::MatrixXd ff_act = act.ff_pre.cwiseMax(0.0);
    g.mat(pre + "ff.w2") += ff_act.transpose() * dz2;
    g.mat(pre + "ff.b2").row(0) += dz2.colwise().sum();
    Eigen::MatrixXd dpre =
        ((dz2 * p_.mat(pre + "ff.w2").transpose()).array() *
         (act.ff_pre.array() > 0.0).cast<double>())
            .matrix();
    g.mat(pre + "ff.w1") += act.y1.transpose() * dpre;
    g.mat(pre + "ff.b1").row(0) += dpre.colwise().sum();
    Eigen::MatrixXd dy1 = dz2 + dpre * p_.mat(pre + "ff.w1").transpose();

    Eigen::MatrixXd dz1 = layer_norm_backward(dy1, act.z1, act.ln1_mu, act.ln1_is,
                                              p_.mat(pre + "ln1.g"), g.mat(pre + "ln1.g"),
                                              g.mat(pre + "ln1.b"));

    g.mat(pre + "attn.wo") += act.attn_cat.transpose() * dz1;
    Eigen::MatrixXd dcat = dz1 * p_.mat(pre + "attn.wo").transpose();
    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(BT, D);
    Eigen::MatrixXd dk = Eigen::MatrixXd::Zero(BT, D);
    Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(BT, D);
    for (int i = 0; i < enc.B; ++i) {
      const Eigen::Index r0 = Eigen::Index(i) * enc.T;
      for (int hd_i = 0; hd_i < heads; ++hd_i) {
        const Eigen::Index c0 = Eigen::Index(hd_i) * dh;
        const Eigen::MatrixXd& a = act.attn[size_t(i) * heads + hd_i];
        auto dout = dcat.block(r0, c0, enc.T, dh);
        Eigen::MatrixXd da = dout * act.v.block(r0, c0, enc.T, dh).transpose();
        dv.block(r0, c0, enc.T, dh) = a.transpose() * dout;
        Eigen::MatrixXd dscore = softmax_backward(a, da) * attn_scale;
        dq.block(r0, c0, enc.T, dh) = dscore * act.k.block(r0, c0, enc.T, dh);
        dk.block(r0, c0, enc.T, dh) = dscore.transpose() * act.q.block(r0, c0, enc.T, dh);
      }
    }
    g.mat(pre + "attn.wq") += act.in.transpose() * dq;
    g.mat(pre + "attn.wk") += act.in.transpose() * dk;
    g.mat(pre + "attn.wv") += act.in.transpose() * dv;
    Eigen::MatrixXd din = dz1;
    din += dq * p_.mat(pre + "attn.wq").transpose();
    din += dk * p_.mat(pre + "attn.wk").transpose();
    din += dv * p_.mat(pre + "attn.wv").transpose();
    dy = std::move(din);
  }

  if (cfg.kind == ProblemKind::tsp) {
    g.mat("embed.node.w") += enc.X.transpose() * dy;
    g.mat("embed.node.b").row(0) += dy.colwise().sum();
  } else {
    const int n = enc.T - 1;
    Eigen::MatrixXd dc(enc.B * n, D);
    Eigen::MatrixXd dd(enc.B, D);
    Eigen::MatrixXd xc(enc.B * n, 3);
    Eigen::MatrixXd xd(enc.B, 2);
    for (int i = 0; i < enc.B; ++i) {
      dc.middleRows(Eigen::Index(i) * n, n) = dy.middleRows(Eigen::Index(i) * enc.T, n);
      dd.row(i) = dy.row(Eigen::Index(i) * enc.T + n);
      xc.middleRows(Eigen::Index(i) * n, n) = enc.X.block(Eigen::Index(i) * enc.T, 0, n, 3);
      xd.row(i) = enc.X.block(Eigen::Index(i) * enc.T + n, 0, 1, 2);
    }
    g.mat("embed.customer.w") += xc.transpose() * dc;
    g.mat("embed.customer.b").row(0) += dc.colwise().sum();
    g.mat("embed.depot.w") += xd.transpose() * dd;
    g.mat("embed.depot.b").row(0) += dd.colwise().sum();
  }
}

Eigen::MatrixXd encode_instance(const Policy& p, const Instance& inst) {
  Net net(p);
  Encode enc = net.encode({&inst}, false);
  return enc.H;
}

Behavior evaluate_behavior(const Policy& p, const ConstructionState& state) {
  const Instance& inst = *state.instance;
  Net net(p);
  Encode enc = net.encode({&inst}, false);
  DecodeRow row;
  row.instance = 0;
  row.cur_token = state.current;
  row.cap_frac = inst.kind == ProblemKind::cvrp ? state.remaining / inst.capacity : 0.0;
  std::vector<std::uint8_t> mask = feasible_actions(state);
  StepAct step = net.decode_step(enc, {row}, mask, false);
  Behavior b;
  b.probs = step.probs.row(0);
  b.mask = std::move(mask);
  return b;
}

}  // namespace llrbc
