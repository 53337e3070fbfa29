#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rapr/core.hpp"

namespace rapr {

// Estimation-rate function xi(n, delta') shared by the regression and
// evaluation oracles. The simulation mode drops the log factor and the
// dependence on delta' so that sqrt(xi(T, 0.5)) = scale_c * sqrt(d/T).
struct XiRateConfig {
  enum class Mode { kTheory, kSimulation };

  double scale_c = 0.25;
  Mode mode = Mode::kTheory;
  std::size_t dim = 1;
  std::size_t num_arms = 2;

  double rate(double n, double delta_prime) const;
};

// xi_{m+1} = min(1, 2 * xi((tau_m - tau_{m-1})/3, delta/(16 m^3))) on the
// doubling schedule tau_1 = 3, tau_m = 2 tau_{m-1}. The cap at 1 reflects
// that squared errors of [0,1]-valued targets cannot exceed 1.
double xi_for_epoch(int m, double delta, const XiRateConfig& cfg);

// Round tau_m ends epoch m (tau_0 = 0, tau_1 = 3, doubling afterwards).
long long epoch_end_round(int m);

// Per-arm ridge least squares over the samples of each arm. The intercept is
// unpenalized; arms with no samples get the zero predictor. With
// ridge_lambda = 0 the solver returns the minimum-norm least-squares
// solution, which keeps singular designs deterministic.
LinearRewardModel fit_reward_model(std::span<const LoggedSample> samples,
                                   std::size_t num_arms, std::size_t dim,
                                   double ridge_lambda);

// Inverse-propensity estimate of the target's value from logged data:
// (1/n) sum target_prob(a_t|x_t) r_t / propensity_t.
double ips_value(std::span<const LoggedSample> samples,
                 const GreedyPolicy& target);
double ips_value(std::span<const LoggedSample> samples,
                 const ActionKernel& target);

// Model-based value estimate (1/n) sum E_{a~target(.|x_t)} f(x_t, a).
double model_value(std::span<const LoggedSample> samples,
                   const LinearRewardModel& f, const GreedyPolicy& target);
double model_value(std::span<const LoggedSample> samples,
                   const LinearRewardModel& f, const ActionKernel& target);

// Cost-sensitive classification instance: pick one arm per context to
// maximize (or minimize) the total score.
struct CscProblem {
  std::vector<ContextVector> contexts;
  std::vector<std::vector<double>> scores;  // n rows of K scores
  bool maximize = true;
};

enum class PolicyClass { kInducedGreedy, kUniversal };

struct CscSolution {
  std::vector<int> arms;   // chosen arm per training context
  double mean_score = 0.0;  // mean score attained on the training contexts
  // Present for the induced-greedy class: the affine scorer whose greedy
  // policy was selected (unclamped, usable on fresh contexts).
  std::optional<GreedyPolicy> policy;
};

// Universal class: exact per-row argmax (ties to the lowest arm).
// Induced-greedy class: regression reduction, per-arm least squares of the
// score column on the contexts, then the fitted scorer's greedy policy.
CscSolution csc_argmax(const CscProblem& problem, PolicyClass policy_class);

}  // namespace rapr
