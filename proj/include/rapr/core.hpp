#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rapr/rng.hpp"

namespace rapr {

// Context feature vector of length d.
using ContextVector = std::vector<double>;

// One logged interaction. `propensity` is the exact probability the logging
// kernel assigned to `arm` at `context` when the sample was collected.
struct LoggedSample {
  ContextVector context;
  int arm = 0;
  double reward = 0.0;
  double propensity = 1.0;
};

// Per-arm affine reward predictor with clamped output. Arms are indexed
// 0..K-1; prediction for (x, a) is clamp(intercept[a] + <weights[a], x>).
class LinearRewardModel {
 public:
  LinearRewardModel() = default;

  // Zero model: predicts clip applied to 0 everywhere.
  LinearRewardModel(std::size_t num_arms, std::size_t dim)
      : weights_(num_arms, std::vector<double>(dim, 0.0)),
        intercepts_(num_arms, 0.0) {}

  LinearRewardModel(std::vector<std::vector<double>> weights,
                    std::vector<double> intercepts, double clip_lo = 0.0,
                    double clip_hi = 1.0)
      : weights_(std::move(weights)),
        intercepts_(std::move(intercepts)),
        clip_lo_(clip_lo),
        clip_hi_(clip_hi) {
    if (weights_.size() != intercepts_.size())
      throw std::invalid_argument("weights/intercepts arm count mismatch");
  }

  std::size_t num_arms() const { return intercepts_.size(); }
  std::size_t dim() const { return weights_.empty() ? 0 : weights_[0].size(); }

  double predict(const ContextVector& x, int arm) const {
    if (arm < 0 || static_cast<std::size_t>(arm) >= num_arms())
      throw std::invalid_argument("arm index out of range");
    const auto& w = weights_[arm];
    if (x.size() != w.size())
      throw std::invalid_argument("context dimension mismatch: got " +
                                  std::to_string(x.size()) + ", expected " +
                                  std::to_string(w.size()));
    double v = intercepts_[arm];
    for (std::size_t j = 0; j < w.size(); ++j) v += w[j] * x[j];
    return std::clamp(v, clip_lo_, clip_hi_);
  }

  // Lowest-index maximizer of predict(x, .).
  int greedy_arm(const ContextVector& x) const {
    int best = 0;
    double best_v = predict(x, 0);
    for (int a = 1; static_cast<std::size_t>(a) < num_arms(); ++a) {
      const double v = predict(x, a);
      if (v > best_v) {
        best = a;
        best_v = v;
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& weights() const { return weights_; }
  const std::vector<double>& intercepts() const { return intercepts_; }
  double clip_lo() const { return clip_lo_; }
  double clip_hi() const { return clip_hi_; }

 private:
  std::vector<std::vector<double>> weights_;
  std::vector<double> intercepts_;
  double clip_lo_ = 0.0;
  double clip_hi_ = 1.0;
};

// Deterministic policy induced by a reward model; ties go to the lowest arm.
struct GreedyPolicy {
  LinearRewardModel model;

  int action(const ContextVector& x) const { return model.greedy_arm(x); }

  // Indicator kernel view of the policy.
  double prob(const ContextVector& x, int arm) const {
    return action(x) == arm ? 1.0 : 0.0;
  }
};

// Distribution over arms at each context. Implementations must normalize to
// 1 per context and keep every arm probability strictly positive.
class ActionKernel {
 public:
  virtual ~ActionKernel() = default;

  virtual std::size_t num_arms() const = 0;
  virtual double prob(const ContextVector& x, int arm) const = 0;
  virtual int sample(const ContextVector& x, RngStream& rng) const = 0;

  virtual std::vector<double> probs(const ContextVector& x) const {
    std::vector<double> p(num_arms());
    for (std::size_t a = 0; a < p.size(); ++a)
      p[a] = prob(x, static_cast<int>(a));
    return p;
  }
};

class UniformKernel final : public ActionKernel {
 public:
  explicit UniformKernel(std::size_t num_arms) : k_(num_arms) {}

  std::size_t num_arms() const override { return k_; }
  double prob(const ContextVector&, int) const override {
    return 1.0 / static_cast<double>(k_);
  }
  int sample(const ContextVector&, RngStream& rng) const override {
    return rng.uniform_int(static_cast<int>(k_));
  }

 private:
  std::size_t k_;
};

// Epoch sample set with its three-way round-robin split. Split sizes differ
// by at most one.
struct EpochDataset {
  std::vector<LoggedSample> samples;
  std::vector<std::size_t> split1, split2, split3;

  static EpochDataset make(std::vector<LoggedSample> data) {
    EpochDataset out;
    out.samples = std::move(data);
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
      switch (i % 3) {
        case 0: out.split1.push_back(i); break;
        case 1: out.split2.push_back(i); break;
        default: out.split3.push_back(i); break;
      }
    }
    return out;
  }

  std::vector<LoggedSample> subset(const std::vector<std::size_t>& idx) const {
    std::vector<LoggedSample> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(samples[i]);
    return out;
  }
};

inline bool all_finite(const ContextVector& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace rapr
