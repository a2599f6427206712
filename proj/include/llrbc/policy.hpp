#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

#include "llrbc/common.hpp"
#include "llrbc/rng.hpp"

namespace llrbc {

struct ModelConfig {
  ProblemKind kind = ProblemKind::tsp;
  int embed_dim = 64;
  int layers = 3;
  int heads = 4;
  int ff_dim = 128;
  double clip = 10.0;

  int context_dim() const {
    return 2 * embed_dim + (kind == ProblemKind::cvrp ? 1 : 0);
  }
  void validate() const;
};

struct ParamShape {
  std::string name;
  int rows = 0;
  int cols = 0;
  Eigen::Index offset = 0;
  Eigen::Index size() const { return Eigen::Index(rows) * cols; }
};

// Flat parameter vector with a named-shape registry. The registration order fixes the
// flat layout, so checkpoints round-trip bit-exactly.
class Policy {
 public:
  Policy(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<ParamShape>& shapes() const { return shapes_; }
  Eigen::Index param_count() const { return theta_.size(); }

  Eigen::VectorXd& theta() { return theta_; }
  const Eigen::VectorXd& theta() const { return theta_; }

  Eigen::Map<const Eigen::MatrixXd> mat(const std::string& name) const;
  Eigen::Map<Eigen::MatrixXd> mat(const std::string& name);

  // Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) on linear maps; normalization gains 1,
  // offsets 0. Element order follows the registry, column-major within each matrix.
  void init_params(Rng& rng);

  std::string to_checkpoint_json() const;
  static Policy from_checkpoint_json(const std::string& text);
  void save(const std::string& path) const;
  static Policy load(const std::string& path);

 private:
  const ParamShape& shape(const std::string& name) const;

  ModelConfig cfg_;
  std::vector<ParamShape> shapes_;
  std::unordered_map<std::string, size_t> index_;
  Eigen::VectorXd theta_;
};

// Gradient buffer sharing the policy's flat layout.
class Grad {
 public:
  explicit Grad(const Policy& p) : policy_(&p), g_(Eigen::VectorXd::Zero(p.param_count())) {}

  Eigen::VectorXd& vec() { return g_; }
  const Eigen::VectorXd& vec() const { return g_; }
  void zero() { g_.setZero(); }

  Eigen::Map<Eigen::MatrixXd> mat(const std::string& name);

 private:
  const Policy* policy_;
  Eigen::VectorXd g_;
};

}  // namespace llrbc
