#include "rapr/harness.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "rapr/baselines.hpp"

namespace rapr {

namespace {

using Json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double estimate_cumulative_regret(const RunTrace& trace,
                                  const Environment& env) {
  double total = 0.0;
  for (const RoundRecord& r : trace.rounds) {
    double expected = 0.0;
    for (std::size_t a = 0; a < r.probs.size(); ++a)
      expected += r.probs[a] * env.mean_reward(r.context, static_cast<int>(a));
    total += env.best_mean(r.context) - expected;
  }
  return total;
}

double estimate_simple_regret(const GreedyPolicy& policy,
                              const Environment& env, std::size_t n_contexts,
                              RngStream& rng) {
  if (n_contexts < 1) throw std::invalid_argument("need at least one context");
  double total = 0.0;
  for (std::size_t i = 0; i < n_contexts; ++i) {
    const ContextVector x = env.sample_context(rng);
    total += env.best_mean(x) - env.mean_reward(x, policy.action(x));
  }
  return total / static_cast<double>(n_contexts);
}

double estimate_policy_value(const GreedyPolicy& policy,
                             const Environment& env, std::size_t n_contexts,
                             RngStream& rng) {
  if (n_contexts < 1) throw std::invalid_argument("need at least one context");
  double total = 0.0;
  for (std::size_t i = 0; i < n_contexts; ++i) {
    const ContextVector x = env.sample_context(rng);
    total += env.mean_reward(x, policy.action(x));
  }
  return total / static_cast<double>(n_contexts);
}

double estimate_optimal_cover(const ActionKernel& kernel,
                              const Environment& env, std::size_t n_contexts,
                              RngStream& rng) {
  if (n_contexts < 1) throw std::invalid_argument("need at least one context");
  double total = 0.0;
  for (std::size_t i = 0; i < n_contexts; ++i) {
    const ContextVector x = env.sample_context(rng);
    total += 1.0 / kernel.prob(x, env.best_arm(x));
  }
  return total / static_cast<double>(n_contexts);
}

std::string algo_name(Algo a) {
  switch (a) {
    case Algo::kRapr: return "rapr";
    case Algo::kUniform: return "uniform";
    case Algo::kLinUcb: return "linucb";
    case Algo::kLinTs: return "lints";
  }
  return "unknown";
}

Algo algo_from_name(const std::string& name) {
  if (name == "rapr") return Algo::kRapr;
  if (name == "uniform") return Algo::kUniform;
  if (name == "linucb") return Algo::kLinUcb;
  if (name == "lints") return Algo::kLinTs;
  throw std::invalid_argument("unknown algorithm: " + name);
}

EnvPtr EnvConfig::build() const {
  if (name == "ball") {
    BallDgp::Options opt;
    opt.region_fix = region_fix;
    opt.full_arm_set = full_arm_set;
    opt.clamp_rewards = clamp_rewards;
    opt.reward_scale = reward_scale;
    opt.noise_half_width = noise_half_width;
    return std::make_shared<BallDgp>(opt);
  }
  GapOptions gap_opt;
  gap_opt.top_mean = top_mean;
  gap_opt.noise_half_width = gap_noise_half_width;
  if (name == "gap")
    return make_gap_instance(num_arms, dim, top_arms, lambda, gap, gap_opt);
  if (name == "misspecified")
    return make_misspecified(
        make_gap_instance(num_arms, dim, top_arms, lambda, gap, gap_opt),
        distortion);
  throw std::invalid_argument("unknown environment: " + name);
}

MeanStderr mean_stderr(const std::vector<double>& values) {
  MeanStderr out;
  const double n = static_cast<double>(values.size());
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

namespace {

SingleRun run_baseline(Algo algo, const Environment& env,
                       const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::size_t k = env.num_arms();
  const std::size_t d = env.dim();
  RngStream env_rng(seed, kEnvStreamTag);
  RngStream algo_rng(seed, kAlgoStreamTag);

  LinUcbState state(k, d, cfg.ucb_scale);
  SingleRun out;
  out.trace.rounds.reserve(cfg.horizon);
  for (long long t = 1; t <= cfg.horizon; ++t) {
    const ContextVector x = env.sample_context(env_rng);
    int arm = 0;
    std::vector<double> probs(k, 0.0);
    double propensity = 1.0;
    switch (algo) {
      case Algo::kUniform:
        arm = uniform_step(k, algo_rng);
        std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(k));
        propensity = 1.0 / static_cast<double>(k);
        break;
      case Algo::kLinUcb:
        arm = state.ucb_arm(x);
        probs[arm] = 1.0;
        break;
      case Algo::kLinTs:
        arm = state.thompson_arm(x, algo_rng);
        probs[arm] = 1.0;
        break;
      default:
        throw std::logic_error("not a baseline algorithm");
    }
    const double reward = env.sample_reward(x, arm, env_rng);
    state.update(x, arm, reward);
    out.trace.rounds.push_back(
        {t, 1, x, arm, reward, propensity, true, std::move(probs)});
  }
  out.policy = GreedyPolicy{state.ridge_model()};
  return out;
}

}  // namespace

SingleRun run_single(Algo algo, const Environment& env,
                     const ExperimentConfig& cfg, std::uint64_t seed) {
  if (algo != Algo::kRapr) return run_baseline(algo, env, cfg, seed);
  RaprConfig rc = cfg.rapr;
  RaprRunResult res = rapr_run(env, cfg.horizon, rc, seed);
  SingleRun out;
  out.trace = std::move(res.trace);
  if (!res.policy.greedy)
    throw std::logic_error(
        "rapr run produced a non-generalizing final policy; use the "
        "induced-greedy policy class in the harness");
  out.policy = std::move(*res.policy.greedy);
  out.rapr_state = std::move(res.state);
  return out;
}

namespace {

void write_trace_csv(const std::filesystem::path& path, std::uint64_t seed,
                     const RunTrace& trace, std::size_t dim) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f << "run_id,t,epoch";
  for (std::size_t j = 0; j < dim; ++j) f << ",x_" << j;
  f << ",arm,reward,propensity,safe\n";
  for (const RoundRecord& r : trace.rounds) {
    f << seed << ',' << r.t << ',' << r.epoch;
    for (double v : r.context) f << ',' << fmt(v);
    f << ',' << r.arm << ',' << fmt(r.reward) << ',' << fmt(r.propensity)
      << ',' << (r.safe ? 1 : 0) << '\n';
  }
}

void write_epochs_csv(const std::filesystem::path& path,
                      const RunTrace& trace) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f << "m,tau_m,eta,alpha,xi,safe,L1,L2,L3,rhs\n";
  for (const EpochRecord& e : trace.epochs) {
    f << e.m << ',' << e.tau << ',' << fmt(e.eta) << ',' << fmt(e.alpha)
      << ',' << fmt(e.xi) << ',' << (e.safe ? 1 : 0);
    if (e.test) {
      f << ',' << fmt(e.test->l1) << ',' << fmt(e.test->l2) << ','
        << fmt(e.test->l3) << ',' << fmt(e.test->rhs);
    } else {
      f << ",,,,";
    }
    f << '\n';
  }
}

std::vector<double> epoch_covers(const RaprState& st, const Environment& env,
                                 std::size_t n_contexts, std::uint64_t seed,
                                 std::size_t max_epochs) {
  std::vector<double> covers;
  for (std::size_t m = 1; m <= std::min(st.eta_seq.size(), max_epochs); ++m) {
    const std::size_t prefix = st.m_hat ? std::min<std::size_t>(
                                              m, static_cast<std::size_t>(
                                                     *st.m_hat))
                                        : m;
    if (prefix > st.history.size()) break;
    const std::vector<EpochHistoryEntry> hist(
        st.history.begin(), st.history.begin() + prefix);
    const ProportionalResponseKernel kernel(hist, st.eta_seq[prefix - 1],
                                            st.num_arms);
    RngStream rng(seed, kEvalStreamTag + m);
    covers.push_back(estimate_optimal_cover(kernel, env, n_contexts, rng));
  }
  return covers;
}

Json env_json(const EnvConfig& e) {
  Json j;
  j["name"] = e.name;
  if (e.name == "ball") {
    j["region_fix"] = e.region_fix;
    j["full_arm_set"] = e.full_arm_set;
    j["clamp_rewards"] = e.clamp_rewards;
    j["reward_scale"] = e.reward_scale;
    j["noise_half_width"] = e.noise_half_width;
  } else {
    j["num_arms"] = e.num_arms;
    j["dim"] = e.dim;
    j["top_arms"] = e.top_arms;
    j["lambda"] = e.lambda;
    j["gap"] = e.gap;
    if (e.name == "misspecified") j["distortion"] = e.distortion;
  }
  return j;
}

}  // namespace

SummaryStats run_experiment(const ExperimentConfig& cfg) {
  const EnvPtr env = cfg.env.build();
  std::filesystem::create_directories(cfg.out_dir);

  SummaryStats stats;
  std::ofstream scatter(std::filesystem::path(cfg.out_dir) / "scatter.csv");
  if (!scatter)
    throw std::runtime_error("cannot open scatter.csv under " + cfg.out_dir);
  scatter << "algo,seed,exploration_mean_reward,learned_policy_value\n";

  for (Algo algo : cfg.algos) {
    AlgoSummary& summary = stats.per_algo[algo_name(algo)];
    summary.algo = algo;
    const std::filesystem::path algo_dir =
        std::filesystem::path(cfg.out_dir) / algo_name(algo);
    if (cfg.write_traces) std::filesystem::create_directories(algo_dir);

    for (std::size_t run = 0; run < cfg.runs; ++run) {
      const std::uint64_t seed = cfg.base_seed + run;
      SingleRun sr = run_single(algo, *env, cfg, seed);

      RunMetrics m;
      m.seed = seed;
      double reward_sum = 0.0;
      for (const RoundRecord& r : sr.trace.rounds) reward_sum += r.reward;
      m.exploration_mean_reward =
          reward_sum / static_cast<double>(sr.trace.rounds.size());
      {
        RngStream eval_rng(seed, kEvalStreamTag);
        double value = 0.0, regret = 0.0;
        for (std::size_t i = 0; i < cfg.simple_regret_contexts; ++i) {
          const ContextVector x = env->sample_context(eval_rng);
          const double v = env->mean_reward(x, sr.policy.action(x));
          value += v;
          regret += env->best_mean(x) - v;
        }
        m.learned_policy_value =
            value / static_cast<double>(cfg.simple_regret_contexts);
        m.simple_regret =
            regret / static_cast<double>(cfg.simple_regret_contexts);
      }
      m.cumulative_regret = estimate_cumulative_regret(sr.trace, *env);
      if (sr.rapr_state) {
        m.safe_at_end = sr.rapr_state->safe;
        m.epochs = sr.trace.epochs;
        m.epoch_cover = epoch_covers(*sr.rapr_state, *env, cfg.cover_contexts,
                                     seed, sr.trace.epochs.size());
      }
      if (cfg.write_traces) {
        write_trace_csv(algo_dir / ("trace_" + std::to_string(seed) + ".csv"),
                        seed, sr.trace, env->dim());
        write_epochs_csv(
            algo_dir / ("epochs_" + std::to_string(seed) + ".csv"), sr.trace);
      }
      scatter << algo_name(algo) << ',' << seed << ','
              << fmt(m.exploration_mean_reward) << ','
              << fmt(m.learned_policy_value) << '\n';
      summary.runs.push_back(std::move(m));
    }

    std::vector<double> expl, value, sreg, creg;
    for (const RunMetrics& m : summary.runs) {
      expl.push_back(m.exploration_mean_reward);
      value.push_back(m.learned_policy_value);
      sreg.push_back(m.simple_regret);
      creg.push_back(m.cumulative_regret);
    }
    summary.exploration_mean_reward = mean_stderr(expl);
    summary.learned_policy_value = mean_stderr(value);
    summary.simple_regret = mean_stderr(sreg);
    summary.cumulative_regret = mean_stderr(creg);
  }

  Json j;
  j["horizon"] = cfg.horizon;
  j["runs"] = cfg.runs;
  j["base_seed"] = cfg.base_seed;
  j["env"] = env_json(cfg.env);
  // Simple regret is measured against the greedy policy of the true mean
  // rewards; for misspecified environments that is the global optimum, not
  // the best policy within the affine class.
  j["simple_regret_benchmark"] = "global_optimal";
  Json algos = Json::object();
  for (const auto& [name, summary] : stats.per_algo) {
    Json a;
    a["exploration_mean_reward"] = {
        {"mean", summary.exploration_mean_reward.mean},
        {"stderr", summary.exploration_mean_reward.stderr_}};
    a["learned_policy_value"] = {
        {"mean", summary.learned_policy_value.mean},
        {"stderr", summary.learned_policy_value.stderr_}};
    a["simple_regret"] = {{"mean", summary.simple_regret.mean},
                          {"stderr", summary.simple_regret.stderr_}};
    a["cumulative_regret"] = {{"mean", summary.cumulative_regret.mean},
                              {"stderr", summary.cumulative_regret.stderr_}};
    std::size_t safe_runs = 0;
    for (const RunMetrics& m : summary.runs)
      if (m.safe_at_end) ++safe_runs;
    a["safe_fraction"] =
        static_cast<double>(safe_runs) / static_cast<double>(summary.runs.size());
    if (summary.algo == Algo::kRapr) {
      // Per-epoch means across seeds, up to the shortest run.
      std::size_t depth = SIZE_MAX;
      for (const RunMetrics& m : summary.runs)
        depth = std::min(depth, std::min(m.epoch_cover.size(), m.epochs.size()));
      Json per_epoch = Json::array();
      for (std::size_t i = 0; i + 1 <= depth && depth != SIZE_MAX; ++i) {
        double eta = 0.0, alpha = 0.0, cover = 0.0;
        for (const RunMetrics& m : summary.runs) {
          eta += m.epochs[i].eta;
          alpha += m.epochs[i].alpha;
          cover += m.epoch_cover[i];
        }
        const double n = static_cast<double>(summary.runs.size());
        per_epoch.push_back({{"m", i + 1},
                             {"eta_mean", eta / n},
                             {"alpha_mean", alpha / n},
                             {"cover_mean", cover / n}});
      }
      a["per_epoch"] = per_epoch;
    }
    algos[name] = a;
  }
  j["algos"] = algos;
  std::ofstream summary_file(std::filesystem::path(cfg.out_dir) /
                             "summary.json");
  if (!summary_file)
    throw std::runtime_error("cannot open summary.json under " + cfg.out_dir);
  summary_file << j.dump(2) << '\n';
  return stats;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path.string());
  Json j;
  f >> j;

  ExperimentConfig cfg;
  if (j.contains("env")) {
    const Json& e = j["env"];
    EnvConfig& ec = cfg.env;
    ec.name = e.value("name", ec.name);
    ec.region_fix = e.value("region_fix", ec.region_fix);
    ec.full_arm_set = e.value("full_arm_set", ec.full_arm_set);
    ec.clamp_rewards = e.value("clamp_rewards", ec.clamp_rewards);
    ec.reward_scale = e.value("reward_scale", ec.reward_scale);
    ec.noise_half_width = e.value("noise_half_width", ec.noise_half_width);
    ec.num_arms = e.value("num_arms", ec.num_arms);
    ec.dim = e.value("dim", ec.dim);
    ec.top_arms = e.value("top_arms", ec.top_arms);
    ec.lambda = e.value("lambda", ec.lambda);
    ec.gap = e.value("gap", ec.gap);
    ec.top_mean = e.value("top_mean", ec.top_mean);
    ec.gap_noise_half_width =
        e.value("gap_noise_half_width", ec.gap_noise_half_width);
    ec.distortion = e.value("distortion", ec.distortion);
  }
  if (j.contains("algos")) {
    cfg.algos.clear();
    for (const auto& name : j["algos"])
      cfg.algos.push_back(algo_from_name(name.get<std::string>()));
  } else if (j.contains("algo")) {
    cfg.algos = {algo_from_name(j["algo"].get<std::string>())};
  }
  cfg.rapr.omega = j.value("omega", cfg.rapr.omega);
  cfg.rapr.delta = j.value("delta", cfg.rapr.delta);
  cfg.rapr.beta_max = j.value("beta_max", cfg.rapr.beta_max);
  cfg.rapr.bloat = j.value("bloat", cfg.rapr.bloat);
  cfg.rapr.ridge_lambda = j.value("ridge_lambda", cfg.rapr.ridge_lambda);
  cfg.rapr.realizability_shortcut =
      j.value("realizability_shortcut", cfg.rapr.realizability_shortcut);
  if (j.contains("xi_mode")) {
    const std::string mode = j["xi_mode"].get<std::string>();
    if (mode == "simulation")
      cfg.rapr.xi.mode = XiRateConfig::Mode::kSimulation;
    else if (mode == "theory")
      cfg.rapr.xi.mode = XiRateConfig::Mode::kTheory;
    else
      throw std::invalid_argument("unknown xi_mode: " + mode);
  }
  cfg.rapr.xi.scale_c = j.value("scale_c", cfg.rapr.xi.scale_c);
  if (j.contains("csc_class")) {
    const std::string cls = j["csc_class"].get<std::string>();
    if (cls == "universal")
      cfg.rapr.csc_class = PolicyClass::kUniversal;
    else if (cls == "induced" || cls == "induced-greedy")
      cfg.rapr.csc_class = PolicyClass::kInducedGreedy;
    else
      throw std::invalid_argument("unknown csc_class: " + cls);
  }
  cfg.ucb_scale = j.value("ucb_scale", cfg.ucb_scale);
  cfg.horizon = j.value("T", cfg.horizon);
  cfg.base_seed = j.value("seed", cfg.base_seed);
  cfg.runs = j.value("runs", cfg.runs);
  cfg.simple_regret_contexts =
      j.value("simple_regret_contexts", cfg.simple_regret_contexts);
  cfg.cover_contexts = j.value("cover_contexts", cfg.cover_contexts);
  cfg.write_traces = j.value("write_traces", cfg.write_traces);
  cfg.out_dir = j.value("out", cfg.out_dir);
  return cfg;
}

}  // namespace rapr
