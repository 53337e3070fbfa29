#pragma once

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "rapr/core.hpp"

namespace rapr {

// Synthetic environment exposing the true conditional mean reward, so the
// harness can compute regret and cover metrics exactly. Environments are
// immutable; sampling draws from a caller-owned rng stream.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t num_arms() const = 0;
  virtual ContextVector sample_context(RngStream& rng) const = 0;
  virtual double mean_reward(const ContextVector& x, int arm) const = 0;
  virtual double sample_reward(const ContextVector& x, int arm,
                               RngStream& rng) const = 0;

  // Monte-Carlo estimate of the squared bias of the affine model class under
  // uniform logging; only misspecified environments report a value.
  virtual std::optional<double> bias_b() const { return std::nullopt; }

  // Lowest-index maximizer of the true mean reward.
  int best_arm(const ContextVector& x) const {
    int best = 0;
    double best_v = mean_reward(x, 0);
    for (int a = 1; static_cast<std::size_t>(a) < num_arms(); ++a) {
      const double v = mean_reward(x, a);
      if (v > best_v) {
        best = a;
        best_v = v;
      }
    }
    return best;
  }

  double best_mean(const ContextVector& x) const {
    return mean_reward(x, best_arm(x));
  }
};

using EnvPtr = std::shared_ptr<const Environment>;

// Two-dimensional unit-ball environment with eight affine arms: contexts are
// drawn near the axes of the unit circle, mean rewards are
// 0.4 + reward_scale * <theta_a, x>, and reward noise is uniform on
// [-noise_half_width, noise_half_width].
class BallDgp final : public Environment {
 public:
  struct Options {
    // With region_fix off, region branches 2 and 3 both map to
    // (-x1, -x2); with it on, branch 3 maps to (-x2, -x1) instead.
    bool region_fix = false;
    // Eight matching-sign arm parameters by default; the full twelve-vector
    // variant adds the mixed-sign pairs.
    bool full_arm_set = false;
    // Realized rewards may leave [0, 1] by up to 0.2 at extreme contexts;
    // optionally clamp them (this perturbs conditional means slightly).
    bool clamp_rewards = false;
    double reward_scale = 0.2;
    double noise_half_width = 0.4;
  };

  BallDgp();
  explicit BallDgp(Options opt);

  std::size_t dim() const override { return 2; }
  std::size_t num_arms() const override { return arm_params_.size(); }
  ContextVector sample_context(RngStream& rng) const override;
  double mean_reward(const ContextVector& x, int arm) const override;
  double sample_reward(const ContextVector& x, int arm,
                       RngStream& rng) const override;

  const std::vector<std::array<double, 2>>& arm_params() const {
    return arm_params_;
  }

 private:
  Options opt_;
  std::vector<std::array<double, 2>> arm_params_;
};

// Linear environment with a controlled gap structure: for at least a 1-lambda
// fraction of contexts, exactly `top_arms` arms have gap < gap while every
// other arm is at least `gap` below the best. Rewards keep the affine mean
// exactly (the model class is realizable): Bernoulli by default, or
// mean-preserving bounded uniform noise when `noise_half_width` is set.
struct GapOptions {
  double top_mean = 0.75;          // intercept of the leading arms
  double noise_half_width = -1.0;  // negative selects Bernoulli rewards
};

std::shared_ptr<Environment> make_gap_instance(std::size_t num_arms,
                                               std::size_t dim,
                                               std::size_t top_arms,
                                               double lambda, double gap,
                                               GapOptions options = {});

// Wraps a base environment with a sign-structured bump that affine models
// cannot absorb; mean rewards stay in [0, 1]. With distortion zero the base
// environment is reproduced unchanged. Rewards of the distorted environment
// are Bernoulli at the distorted mean.
class MisspecifiedEnv final : public Environment {
 public:
  MisspecifiedEnv(std::shared_ptr<const Environment> base, double distortion);

  std::size_t dim() const override { return base_->dim(); }
  std::size_t num_arms() const override { return base_->num_arms(); }
  ContextVector sample_context(RngStream& rng) const override {
    return base_->sample_context(rng);
  }
  double mean_reward(const ContextVector& x, int arm) const override;
  double sample_reward(const ContextVector& x, int arm,
                       RngStream& rng) const override;
  std::optional<double> bias_b() const override;

  // Monte-Carlo estimate of min over affine models of the expected squared
  // error under uniform logging.
  double estimate_bias(std::size_t n_contexts, std::uint64_t seed) const;

 private:
  std::shared_ptr<const Environment> base_;
  double distortion_;
  mutable std::optional<double> cached_bias_;
};

std::shared_ptr<Environment> make_misspecified(
    std::shared_ptr<const Environment> base, double distortion);

}  // namespace rapr
