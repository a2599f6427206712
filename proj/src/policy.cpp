#include "llrbc/policy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace llrbc {

using nlohmann::json;

void ModelConfig::validate() const {
  if (embed_dim < 1 || layers < 1 || heads < 1 || ff_dim < 1) {
    throw config_error("model dimensions must be positive");
  }
  if (embed_dim % heads != 0) {
    throw config_error("embed_dim " + std::to_string(embed_dim) +
                       " must divide into " + std::to_string(heads) + " heads");
  }
  if (clip <= 0) throw config_error("logit clip must be positive");
}

Policy::Policy(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.embed_dim;
  const int f = cfg_.ff_dim;

  Eigen::Index offset = 0;
  auto add = [&](const std::string& name, int rows, int cols) {
    index_[name] = shapes_.size();
    shapes_.push_back({name, rows, cols, offset});
    offset += Eigen::Index(rows) * cols;
  };

  if (cfg_.kind == ProblemKind::tsp) {
    add("embed.node.w", 2, d);
    add("embed.node.b", 1, d);
  } else {
    add("embed.customer.w", 3, d);
    add("embed.customer.b", 1, d);
    add("embed.depot.w", 2, d);
    add("embed.depot.b", 1, d);
  }
  for (int l = 0; l < cfg_.layers; ++l) {
    std::string p = "enc" + std::to_string(l) + ".";
    add(p + "attn.wq", d, d);
    add(p + "attn.wk", d, d);
    add(p + "attn.wv", d, d);
    add(p + "attn.wo", d, d);
    add(p + "ln1.g", 1, d);
    add(p + "ln1.b", 1, d);
    add(p + "ff.w1", d, f);
    add(p + "ff.b1", 1, f);
    add(p + "ff.w2", f, d);
    add(p + "ff.b2", 1, d);
    add(p + "ln2.g", 1, d);
    add(p + "ln2.b", 1, d);
  }
  add("dec.wctx", cfg_.context_dim(), d);
  add("dec.bctx", 1, d);
  add("dec.wk", d, d);

  theta_ = Eigen::VectorXd::Zero(offset);
}

const ParamShape& Policy::shape(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw data_error("unknown parameter: " + name);
  return shapes_[it->second];
}

Eigen::Map<const Eigen::MatrixXd> Policy::mat(const std::string& name) const {
  const ParamShape& s = shape(name);
  return {theta_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<Eigen::MatrixXd> Policy::mat(const std::string& name) {
  const ParamShape& s = shape(name);
  return {theta_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<Eigen::MatrixXd> Grad::mat(const std::string& name) {
  for (const ParamShape& s : policy_->shapes()) {
    if (s.name == name) return {g_.data() + s.offset, s.rows, s.cols};
  }
  throw data_error("unknown parameter: " + name);
}

namespace {

bool is_norm_param(const std::string& name) {
  return name.find(".ln") != std::string::npos;
}

// fan_in of the linear map a shape belongs to: weight matrices are stored input x
// output, and a bias row inherits its weight's input width.
int fan_in_of(const std::vector<ParamShape>& shapes, size_t i) {
  const ParamShape& s = shapes[i];
  if (s.rows > 1) return s.rows;
  // bias: the matching weight is registered immediately before it
  if (i == 0) throw data_error("bias registered before any weight");
  return shapes[i - 1].rows;
}

}  // namespace

void Policy::init_params(Rng& rng) {
  for (size_t i = 0; i < shapes_.size(); ++i) {
    const ParamShape& s = shapes_[i];
    double* base = theta_.data() + s.offset;
    if (is_norm_param(s.name)) {
      double v = s.name.back() == 'g' ? 1.0 : 0.0;
      for (Eigen::Index k = 0; k < s.size(); ++k) base[k] = v;
      continue;
    }
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in_of(shapes_, i)));
    for (Eigen::Index k = 0; k < s.size(); ++k) base[k] = rng.uniform(-bound, bound);
  }
}

std::string Policy::to_checkpoint_json() const {
  json j;
  j["version"] = 1;
  j["model"] = {{"kind", std::string(to_string(cfg_.kind))},
                {"embed_dim", cfg_.embed_dim},
                {"layers", cfg_.layers},
                {"heads", cfg_.heads},
                {"ff_dim", cfg_.ff_dim},
                {"clip", cfg_.clip}};
  json shapes = json::array();
  for (const ParamShape& s : shapes_) {
    shapes.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}});
  }
  j["shapes"] = shapes;
  j["theta"] = std::vector<double>(theta_.begin(), theta_.end());
  return j.dump();
}

Policy Policy::from_checkpoint_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw data_error(std::string("bad checkpoint json: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1) {
      throw data_error("unsupported checkpoint version");
    }
    const json& m = j.at("model");
    ModelConfig cfg;
    cfg.kind = problem_kind_from_string(m.at("kind").get<std::string>());
    cfg.embed_dim = m.at("embed_dim").get<int>();
    cfg.layers = m.at("layers").get<int>();
    cfg.heads = m.at("heads").get<int>();
    cfg.ff_dim = m.at("ff_dim").get<int>();
    cfg.clip = m.at("clip").get<double>();
    Policy p(cfg);

    const json& shapes = j.at("shapes");
    if (shapes.size() != p.shapes_.size()) {
      throw data_error("checkpoint shape registry does not match the model config");
    }
    for (size_t i = 0; i < p.shapes_.size(); ++i) {
      const ParamShape& s = p.shapes_[i];
      if (shapes[i].at("name") != s.name || shapes[i].at("rows") != s.rows ||
          shapes[i].at("cols") != s.cols) {
        throw data_error("checkpoint shape mismatch at " + s.name);
      }
    }
    auto theta = j.at("theta").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(theta.size()) != p.theta_.size()) {
      throw data_error("checkpoint parameter count mismatch");
    }
    p.theta_ = Eigen::Map<Eigen::VectorXd>(theta.data(), theta.size());
    return p;
  } catch (const json::exception& e) {
    throw data_error(std::string("bad checkpoint json: ") + e.what());
  }
}

void Policy::save(const std::string& path) const {
  write_text_atomic(path, to_checkpoint_json());
}

Policy Policy::load(const std::string& path) {
  return from_checkpoint_json(read_text(path));
}

}  // namespace llrbc
