#include "rapr/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rapr {

LinUcbState::LinUcbState(std::size_t num_arms, std::size_t dim,
                         double ucb_scale)
    : dim_(dim), ucb_scale_(ucb_scale) {
  if (num_arms < 1) throw std::invalid_argument("need at least one arm");
  a_.assign(num_arms, Eigen::MatrixXd::Identity(dim + 1, dim + 1));
  b_.assign(num_arms, Eigen::VectorXd::Zero(dim + 1));
}

Eigen::VectorXd LinUcbState::augment(const ContextVector& x) const {
  if (x.size() != dim_)
    throw std::invalid_argument("context dimension mismatch");
  Eigen::VectorXd v(dim_ + 1);
  for (std::size_t j = 0; j < dim_; ++j) v(j) = x[j];
  v(dim_) = 1.0;
  return v;
}

int LinUcbState::ucb_arm(const ContextVector& x) const {
  const Eigen::VectorXd xv = augment(x);
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < a_.size(); ++a) {
    const Eigen::LLT<Eigen::MatrixXd> llt(a_[a]);
    if (llt.info() != Eigen::Success)
      throw std::logic_error("LinUCB design matrix lost positive definiteness");
    const Eigen::VectorXd theta = llt.solve(b_[a]);
    const double bonus = std::sqrt(xv.dot(llt.solve(xv)));
    const double score = theta.dot(xv) + ucb_scale_ * bonus;
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(a);
    }
  }
  return best;
}

int LinUcbState::thompson_arm(const ContextVector& x, RngStream& rng) const {
  const Eigen::VectorXd xv = augment(x);
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < a_.size(); ++a) {
    const Eigen::LLT<Eigen::MatrixXd> llt(a_[a]);
    if (llt.info() != Eigen::Success)
      throw std::logic_error("LinTS design matrix lost positive definiteness");
    const Eigen::VectorXd theta = llt.solve(b_[a]);
    // u = L^{-T} z has covariance A^{-1}.
    Eigen::VectorXd z(xv.size());
    for (int j = 0; j < z.size(); ++j) z(j) = rng.normal();
    const Eigen::VectorXd u =
        llt.matrixU().solve(z);
    const double score = (theta + ucb_scale_ * u).dot(xv);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(a);
    }
  }
  return best;
}

void LinUcbState::update(const ContextVector& x, int arm, double reward) {
  if (arm < 0 || static_cast<std::size_t>(arm) >= a_.size())
    throw std::invalid_argument("arm index out of range");
  const Eigen::VectorXd xv = augment(x);
  a_[arm] += xv * xv.transpose();
  b_[arm] += reward * xv;
}

LinearRewardModel LinUcbState::ridge_model() const {
  std::vector<std::vector<double>> weights(a_.size(),
                                           std::vector<double>(dim_, 0.0));
  std::vector<double> intercepts(a_.size(), 0.0);
  for (std::size_t a = 0; a < a_.size(); ++a) {
    const Eigen::VectorXd theta = a_[a].llt().solve(b_[a]);
    for (std::size_t j = 0; j < dim_; ++j) weights[a][j] = theta(j);
    intercepts[a] = theta(dim_);
  }
  return LinearRewardModel(std::move(weights), std::move(intercepts));
}

int uniform_step(std::size_t num_arms, RngStream& rng) {
  return rng.uniform_int(static_cast<int>(num_arms));
}

}  // namespace rapr
