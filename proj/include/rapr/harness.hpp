#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rapr/envs.hpp"
#include "rapr/rapr.hpp"
#include "rapr/trace.hpp"

namespace rapr {

// Exact cumulative regret of a run: sum over rounds of
// max_a f*(x_t, a) - E_{a ~ p_t} f*(x_t, a), with the expectation taken
// under the per-round arm distribution recorded in the trace.
double estimate_cumulative_regret(const RunTrace& trace,
                                  const Environment& env);

// Monte-Carlo simple regret of a policy against the greedy policy of f*.
double estimate_simple_regret(const GreedyPolicy& policy,
                              const Environment& env, std::size_t n_contexts,
                              RngStream& rng);

// Monte-Carlo value E_x f*(x, policy(x)).
double estimate_policy_value(const GreedyPolicy& policy,
                             const Environment& env, std::size_t n_contexts,
                             RngStream& rng);

// Monte-Carlo optimal cover V(p, pi_{f*}) = E_x 1 / p(pi_{f*}(x) | x).
double estimate_optimal_cover(const ActionKernel& kernel,
                              const Environment& env, std::size_t n_contexts,
                              RngStream& rng);

enum class Algo { kRapr, kUniform, kLinUcb, kLinTs };

std::string algo_name(Algo a);
Algo algo_from_name(const std::string& name);

struct EnvConfig {
  // "ball", "gap", or "misspecified" (gap base with a bump).
  std::string name = "ball";
  // ball options
  bool region_fix = false;
  bool full_arm_set = false;
  bool clamp_rewards = false;
  double reward_scale = 0.2;
  double noise_half_width = 0.4;
  // gap options
  std::size_t num_arms = 8;
  std::size_t dim = 2;
  std::size_t top_arms = 1;
  double lambda = 0.0;
  double gap = 0.3;
  double top_mean = 0.75;
  double gap_noise_half_width = -1.0;  // negative selects Bernoulli rewards
  // misspecified options
  double distortion = 0.0;

  EnvPtr build() const;
};

struct ExperimentConfig {
  EnvConfig env;
  std::vector<Algo> algos = {Algo::kRapr};
  RaprConfig rapr;
  double ucb_scale = 0.25;
  long long horizon = 5000;
  std::uint64_t base_seed = 1;
  std::size_t runs = 1;
  std::size_t simple_regret_contexts = 10000;
  std::size_t cover_contexts = 2000;
  bool write_traces = true;
  std::string out_dir = "out";
};

struct RunMetrics {
  std::uint64_t seed = 0;
  double exploration_mean_reward = 0.0;
  double learned_policy_value = 0.0;
  double simple_regret = 0.0;
  double cumulative_regret = 0.0;
  bool safe_at_end = true;
  // rapr only: per-epoch Monte-Carlo optimal cover along with eta/alpha
  std::vector<EpochRecord> epochs;
  std::vector<double> epoch_cover;
};

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct AlgoSummary {
  Algo algo = Algo::kRapr;
  std::vector<RunMetrics> runs;
  MeanStderr exploration_mean_reward;
  MeanStderr learned_policy_value;
  MeanStderr simple_regret;
  MeanStderr cumulative_regret;
};

struct SummaryStats {
  std::map<std::string, AlgoSummary> per_algo;
};

MeanStderr mean_stderr(const std::vector<double>& values);

// One seeded run of one algorithm; returns the trace, learned greedy policy,
// and the final rapr state when applicable.
struct SingleRun {
  RunTrace trace;
  GreedyPolicy policy;
  std::optional<RaprState> rapr_state;
};

SingleRun run_single(Algo algo, const Environment& env,
                     const ExperimentConfig& cfg, std::uint64_t seed);

// Executes all seeds for all configured algorithms, writes
// trace_<seed>.csv / epochs_<seed>.csv per run plus summary.json and
// scatter.csv into cfg.out_dir, and returns the aggregated stats.
SummaryStats run_experiment(const ExperimentConfig& cfg);

// Config file loading (JSON mirroring ExperimentConfig keys).
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace rapr
