#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace llrbc {

// Adaptive-moment gradient descent with bias correction. A fresh optimizer is created
// per task; only theta and the buffer cross task boundaries.
class Adam {
 public:
  Adam(Eigen::Index n, double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps),
        m_(Eigen::VectorXd::Zero(n)),
        v_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_.array() = beta2_ * v_.array() + (1.0 - beta2_) * grad.array().square();
    double c1 = 1.0 - std::pow(beta1_, t_);
    double c2 = 1.0 - std::pow(beta2_, t_);
    theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

  long long steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  Eigen::VectorXd m_, v_;
};

}  // namespace llrbc
