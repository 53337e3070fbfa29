#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "rapr/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Contextual bandit simulator: risk-adjusted proportional "
               "response and baselines"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "Execute a simulation experiment");
  std::string config_path;
  std::string env_name, algo, out_dir, xi_mode;
  double omega = -1.0, delta = -1.0;
  long long horizon = -1;
  long long runs = -1, seed = -1;
  run->add_option("--config", config_path, "JSON experiment configuration");
  run->add_option("--env", env_name, "Environment override (ball|gap|misspecified)");
  run->add_option("--algo", algo, "Algorithm override (rapr|uniform|linucb|lints)");
  run->add_option("--omega", omega, "Trade-off parameter override");
  run->add_option("--T", horizon, "Exploration horizon override");
  run->add_option("--delta", delta, "Confidence parameter override");
  run->add_option("--runs", runs, "Number of seeded runs");
  run->add_option("--seed", seed, "Base seed");
  run->add_option("--xi-mode", xi_mode, "Estimation-rate mode (theory|simulation)");
  run->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    rapr::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = rapr::load_experiment_config(config_path);
    if (!env_name.empty()) cfg.env.name = env_name;
    if (!algo.empty()) cfg.algos = {rapr::algo_from_name(algo)};
    if (omega >= 0.0) cfg.rapr.omega = omega;
    if (delta >= 0.0) cfg.rapr.delta = delta;
    if (horizon >= 0) cfg.horizon = horizon;
    if (runs >= 0) cfg.runs = static_cast<std::size_t>(runs);
    if (seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(seed);
    if (!xi_mode.empty()) {
      if (xi_mode == "simulation")
        cfg.rapr.xi.mode = rapr::XiRateConfig::Mode::kSimulation;
      else if (xi_mode == "theory")
        cfg.rapr.xi.mode = rapr::XiRateConfig::Mode::kTheory;
      else
        throw std::invalid_argument("unknown xi mode: " + xi_mode);
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    const rapr::SummaryStats stats = rapr::run_experiment(cfg);
    for (const auto& [name, s] : stats.per_algo) {
      std::printf(
          "%-8s runs=%zu exploration_reward=%.4f+-%.4f learned_value=%.4f+-%.4f "
          "simple_regret=%.4f cumulative_regret=%.1f\n",
          name.c_str(), s.runs.size(), s.exploration_mean_reward.mean,
          s.exploration_mean_reward.stderr_, s.learned_policy_value.mean,
          s.learned_policy_value.stderr_, s.simple_regret.mean,
          s.cumulative_regret.mean);
    }
    std::printf("outputs written to %s\n", cfg.out_dir.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
