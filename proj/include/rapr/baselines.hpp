#pragma once

#include <Eigen/Dense>

#include <vector>

#include "rapr/core.hpp"

namespace rapr {

// Disjoint-arm ridge regression state shared by the linear baselines. The
// intercept enters through feature augmentation x~ = (x, 1); each arm keeps
// A = I + sum x~ x~^T and b = sum r x~.
class LinUcbState {
 public:
  LinUcbState(std::size_t num_arms, std::size_t dim, double ucb_scale = 0.25);

  std::size_t num_arms() const { return a_.size(); }
  std::size_t dim() const { return dim_; }
  double ucb_scale() const { return ucb_scale_; }

  // argmax_a <theta_a, x~> + ucb_scale * sqrt(x~^T A_a^{-1} x~), lowest index
  // on ties.
  int ucb_arm(const ContextVector& x) const;

  // One posterior draw theta~_a ~ N(theta_a, scale^2 A_a^{-1}) per arm, then
  // the greedy arm of the draws.
  int thompson_arm(const ContextVector& x, RngStream& rng) const;

  void update(const ContextVector& x, int arm, double reward);

  // Greedy policy on the current ridge estimates (no exploration bonus).
  LinearRewardModel ridge_model() const;

 private:
  Eigen::VectorXd augment(const ContextVector& x) const;

  std::size_t dim_;
  double ucb_scale_;
  std::vector<Eigen::MatrixXd> a_;
  std::vector<Eigen::VectorXd> b_;
};

// Uniform RCT draw; the propensity of every arm is 1/K.
int uniform_step(std::size_t num_arms, RngStream& rng);

}  // namespace rapr
