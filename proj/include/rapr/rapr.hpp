#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rapr/cas.hpp"
#include "rapr/core.hpp"
#include "rapr/envs.hpp"
#include "rapr/oracles.hpp"
#include "rapr/trace.hpp"

namespace rapr {

struct RaprConfig {
  double omega = 1.0;          // trade-off parameter in [1, K]
  double delta = 0.05;         // confidence parameter
  double beta_max = 0.5;       // proportional response threshold
  double bloat = 20.0;         // CAS width constant
  XiRateConfig xi;             // dim/num_arms filled in by the driver
  double ridge_lambda = 1e-6;
  // Under realizability the learned policy is the greedy policy of the
  // latest fitted model; otherwise the variance-penalized objective is
  // solved with one CSC call.
  bool realizability_shortcut = true;
  PolicyClass csc_class = PolicyClass::kInducedGreedy;

  // Constants used in the reference simulation: unit width constant and the
  // log-free estimation rate with scale 0.25.
  static RaprConfig simulation_preset(double omega_in) {
    RaprConfig cfg;
    cfg.omega = omega_in;
    cfg.bloat = 1.0;
    cfg.xi.mode = XiRateConfig::Mode::kSimulation;
    cfg.xi.scale_c = 0.25;
    return cfg;
  }
};

// Cached output of the policy-evaluation oracle on the latest evaluation
// split: IPS values of each stored model's greedy policy and of the current
// kernel, and each model's self-evaluated value.
struct EvalCache {
  std::vector<double> ips_policy_value;
  double ips_kernel_value = 0.0;
  std::vector<double> model_self_value;
};

struct RaprState {
  std::size_t num_arms = 0;
  std::size_t dim = 0;
  int m = 1;                    // current epoch
  double eta = 1.0;             // eta_m
  double alpha = 0.0;           // alpha_m = 3K / eta_m
  bool safe = true;
  std::optional<int> m_hat;     // epoch at which the kernel froze
  std::vector<double> eta_seq;  // eta_1..eta_m
  std::vector<double> alpha_seq;
  std::vector<EpochHistoryEntry> history;  // entries 1..m (and m_hat + 1)
  KernelPtr kernel;                        // p_m, frozen at p_{m_hat}
  std::vector<LoggedSample> last_eval_samples;
  EvalCache eval_cache;
};

// Largest feasible risk-adjustment parameter for the next epoch: grid
// candidates |split2| / n for n in [|split2|], subject to
// eta <= sqrt(omega K / alpha_m) and lambda(eta) <= K / eta, never below the
// current eta. The feasible grid is downward closed, so binary search finds
// the answer.
double choose_eta(const RaprState& state,
                  std::span<const ContextVector> split2_contexts,
                  const EpochHistoryEntry& candidate, const RaprConfig& cfg);

// Reference linear-scan implementation of the same search (used to validate
// the binary search).
double choose_eta_linear(const RaprState& state,
                         std::span<const ContextVector> split2_contexts,
                         const EpochHistoryEntry& candidate,
                         const RaprConfig& cfg);

// Empirical bound lambda_{m+1}(eta) on the mean CAS measure, capped at K.
double lambda_bound(const RaprState& state,
                    std::span<const ContextVector> split2_contexts,
                    const EpochHistoryEntry& candidate, double eta,
                    const RaprConfig& cfg);

// End-of-epoch misspecification test: passes when
// max(L1, L2, L3) <= 2.05 sqrt(alpha_m xi_{m+1}) + 1.1 sqrt(xi_{m+1}), where
// L1/L2 maximize the signed model-vs-IPS discrepancy (penalized by the
// model-regret sum) over the policy class via CSC, and L3 evaluates the next
// kernel directly.
MisspecStats misspec_test(const RaprState& state,
                          std::span<const LoggedSample> split3,
                          const ActionKernel& next_kernel,
                          const LinearRewardModel& f_next, double xi_next,
                          const RaprConfig& cfg);

struct FinalPolicy {
  // Set for the shortcut and induced-greedy paths; generalizes to fresh
  // contexts.
  std::optional<GreedyPolicy> greedy;
  // Per-context choices on the evaluation samples (universal class only).
  std::vector<int> context_arms;
};

// Variance-penalized policy learning (or the realizability shortcut).
FinalPolicy learn_final_policy(const RaprState& state,
                               std::span<const LoggedSample> final_eval,
                               const RaprConfig& cfg);

// Runs the post-collection end-of-epoch update: fit, risk adjustment, next
// kernel, evaluation estimates, misspecification test (safe mode), or the
// evaluation-only refresh (unsafe mode). Returns the epoch record.
EpochRecord advance_epoch(RaprState& state, std::vector<LoggedSample> epoch_samples,
                          const RaprConfig& cfg);

struct RaprRunResult {
  RunTrace trace;
  FinalPolicy policy;
  RaprState state;
};

// Full run of the algorithm for T rounds against the environment. Rounds
// after the last completed epoch use the current kernel, and the final
// evaluation set is that partial epoch's data.
RaprRunResult rapr_run(const Environment& env, long long T,
                       const RaprConfig& cfg, std::uint64_t seed);

// Fresh state at epoch 1: uniform kernel, zero model, alpha_1 = 3K.
RaprState make_initial_state(std::size_t num_arms, std::size_t dim,
                             const RaprConfig& cfg);

}  // namespace rapr
