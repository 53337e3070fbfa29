#include "rapr/rapr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rapr {

namespace {

void validate_config(const RaprConfig& cfg, std::size_t num_arms) {
  if (cfg.omega < 1.0 || cfg.omega > static_cast<double>(num_arms))
    throw std::invalid_argument("omega must lie in [1, K]");
  if (cfg.delta <= 0.0 || cfg.delta >= 1.0)
    throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(cfg.beta_max > 0.0 && cfg.beta_max < 1.0))
    throw std::invalid_argument("beta_max must lie in (0, 1)");
  if (!(cfg.bloat > 0.0)) throw std::invalid_argument("bloat must be > 0");
}

void check_state_invariants(const RaprState& st) {
  const double three_k = 3.0 * static_cast<double>(st.num_arms);
  if (std::abs(st.alpha - three_k / st.eta) > 1e-9 * three_k)
    throw std::logic_error("state invariant violated: alpha != 3K/eta");
  if (st.alpha < 1.0 - 1e-12 || st.alpha > three_k + 1e-12)
    throw std::logic_error("state invariant violated: alpha outside [1, 3K]");
  for (std::size_t i = 1; i < st.eta_seq.size(); ++i) {
    if (st.eta_seq[i] < st.eta_seq[i - 1] - 1e-12)
      throw std::logic_error("state invariant violated: eta decreased");
    if (st.alpha_seq[i] > st.alpha_seq[i - 1] + 1e-12)
      throw std::logic_error("state invariant violated: alpha increased");
  }
}

std::vector<ContextVector> contexts_of(std::span<const LoggedSample> samples) {
  std::vector<ContextVector> xs;
  xs.reserve(samples.size());
  for (const auto& s : samples) xs.push_back(s.context);
  return xs;
}

// Penalized-regret coefficient sum_{mbar in [m]} gap_mbar(x, a) / (2 mbar^2
// u_mbar) shared by the misspecification test and the final learning
// objective.
double regret_penalty(std::span<const EpochHistoryEntry> entries,
                      const ContextVector& x, int arm) {
  double total = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const EpochHistoryEntry& e = entries[i];
    const double gap =
        e.model.predict(x, e.model.greedy_arm(x)) - e.model.predict(x, arm);
    const double mbar = static_cast<double>(i + 1);
    total += gap / (2.0 * mbar * mbar * e.u);
  }
  return total;
}

void refresh_eval_cache(RaprState& state,
                        std::span<const LoggedSample> samples,
                        std::span<const EpochHistoryEntry> models,
                        const ActionKernel& kernel) {
  if (samples.empty()) return;
  state.eval_cache.ips_policy_value.clear();
  state.eval_cache.model_self_value.clear();
  for (const auto& e : models) {
    const GreedyPolicy pi{e.model};
    state.eval_cache.ips_policy_value.push_back(ips_value(samples, pi));
    state.eval_cache.model_self_value.push_back(
        model_value(samples, e.model, pi));
  }
  state.eval_cache.ips_kernel_value = ips_value(samples, kernel);
}

}  // namespace

RaprState make_initial_state(std::size_t num_arms, std::size_t dim,
                             const RaprConfig& cfg) {
  validate_config(cfg, num_arms);
  RaprState st;
  st.num_arms = num_arms;
  st.dim = dim;
  st.m = 1;
  st.eta = 1.0;
  st.alpha = 3.0 * static_cast<double>(num_arms);
  // Entry 1 carries the zero model; its xi slot takes the trivial bound 1
  // (squared errors of [0,1] targets cannot exceed it) and never affects
  // membership because every zero-model gap is zero.
  st.history.emplace_back(LinearRewardModel(num_arms, dim), st.alpha, 1.0,
                          cfg.bloat);
  st.kernel = std::make_shared<ProportionalResponseKernel>(
      st.history, st.eta, num_arms, cfg.beta_max);
  st.eta_seq = {st.eta};
  st.alpha_seq = {st.alpha};
  return st;
}

double lambda_bound(const RaprState& state,
                    std::span<const ContextVector> split2_contexts,
                    const EpochHistoryEntry& candidate, double eta,
                    const RaprConfig& cfg) {
  const double k = static_cast<double>(state.num_arms);
  const double n2 = static_cast<double>(split2_contexts.size());
  const double m1 = static_cast<double>(state.m + 1);
  std::vector<EpochHistoryEntry> next_history = state.history;
  next_history.push_back(candidate);
  const double mean_size =
      mean_cbar_size(next_history, eta, split2_contexts, cfg.beta_max);
  const double deviation =
      std::sqrt(k * k * std::log(8.0 * n2 * m1 * m1 / cfg.delta) / (2.0 * n2));
  return std::min(1.0 + mean_size + deviation, k);
}

namespace {

template <typename Feasible>
double largest_feasible_eta(const RaprState& state, double cap,
                            std::size_t n2, Feasible&& feasible,
                            bool binary_search) {
  // Grid n2 / n for n in [n2], ascending in the index.
  const auto grid_at = [&](std::size_t idx) {
    return static_cast<double>(n2) / static_cast<double>(n2 - idx);
  };
  if (n2 == 0 || grid_at(0) > cap) return state.eta;
  std::size_t hi = 0;  // largest index with eta <= cap
  {
    std::size_t lo = 0, up = n2 - 1;
    while (lo < up) {
      const std::size_t mid = (lo + up + 1) / 2;
      if (grid_at(mid) <= cap)
        lo = mid;
      else
        up = mid - 1;
    }
    hi = lo;
  }
  if (!binary_search) {
    double best = -1.0;
    for (std::size_t idx = 0; idx <= hi; ++idx)
      if (feasible(grid_at(idx))) best = grid_at(idx);
    return best < 0.0 ? state.eta : std::max(state.eta, best);
  }
  // lambda(eta) is non-decreasing and K/eta decreasing, so feasibility is a
  // prefix property of the ascending grid.
  if (!feasible(grid_at(0))) return state.eta;
  std::size_t lo = 0, up = hi;
  while (lo < up) {
    const std::size_t mid = (lo + up + 1) / 2;
    if (feasible(grid_at(mid)))
      lo = mid;
    else
      up = mid - 1;
  }
  return std::max(state.eta, grid_at(lo));
}

double choose_eta_impl(const RaprState& state,
                       std::span<const ContextVector> split2_contexts,
                       const EpochHistoryEntry& candidate,
                       const RaprConfig& cfg, bool binary_search) {
  const double k = static_cast<double>(state.num_arms);
  const double cap = std::sqrt(cfg.omega * k / state.alpha);
  const auto feasible = [&](double eta) {
    return lambda_bound(state, split2_contexts, candidate, eta, cfg) <=
           k / eta;
  };
  return largest_feasible_eta(state, cap, split2_contexts.size(), feasible,
                              binary_search);
}

}  // namespace

double choose_eta(const RaprState& state,
                  std::span<const ContextVector> split2_contexts,
                  const EpochHistoryEntry& candidate, const RaprConfig& cfg) {
  return choose_eta_impl(state, split2_contexts, candidate, cfg, true);
}

double choose_eta_linear(const RaprState& state,
                         std::span<const ContextVector> split2_contexts,
                         const EpochHistoryEntry& candidate,
                         const RaprConfig& cfg) {
  return choose_eta_impl(state, split2_contexts, candidate, cfg, false);
}

MisspecStats misspec_test(const RaprState& state,
                          std::span<const LoggedSample> split3,
                          const ActionKernel& next_kernel,
                          const LinearRewardModel& f_next, double xi_next,
                          const RaprConfig& cfg) {
  if (split3.empty())
    throw std::invalid_argument("misspec_test: empty evaluation split");
  const double weight = std::sqrt(state.alpha * xi_next);
  MisspecStats out;
  out.rhs = 2.05 * weight + 1.1 * std::sqrt(xi_next);

  // L3: the next kernel, evaluated directly.
  {
    const double model_v = model_value(split3, f_next, next_kernel);
    const double ips_v = ips_value(split3, next_kernel);
    double pen = 0.0;
    for (std::size_t i = 0; i < state.history.size(); ++i) {
      const EpochHistoryEntry& e = state.history[i];
      const GreedyPolicy pi{e.model};
      const double reg = model_value(split3, e.model, pi) -
                         model_value(split3, e.model, next_kernel);
      const double mbar = static_cast<double>(i + 1);
      pen += reg / (2.0 * mbar * mbar * e.u);
    }
    out.l3 = std::abs(model_v - ips_v) - weight * pen;
  }

  // L1/L2: the two signed discrepancies over the policy class, each one CSC
  // call on per-sample score rows.
  const std::size_t k = state.num_arms;
  CscProblem up, down;
  up.contexts = contexts_of(split3);
  down.contexts = up.contexts;
  up.scores.resize(split3.size(), std::vector<double>(k));
  down.scores.resize(split3.size(), std::vector<double>(k));
  for (std::size_t t = 0; t < split3.size(); ++t) {
    const LoggedSample& s = split3[t];
    for (std::size_t a = 0; a < k; ++a) {
      const int arm = static_cast<int>(a);
      const double ips_term =
          arm == s.arm ? s.reward / s.propensity : 0.0;
      const double fhat = f_next.predict(s.context, arm);
      const double pen =
          weight * regret_penalty(state.history, s.context, arm);
      up.scores[t][a] = fhat - ips_term - pen;
      down.scores[t][a] = ips_term - fhat - pen;
    }
  }
  out.l1 = csc_argmax(up, cfg.csc_class).mean_score;
  out.l2 = csc_argmax(down, cfg.csc_class).mean_score;
  out.passed = std::max({out.l1, out.l2, out.l3}) <= out.rhs;
  return out;
}

EpochRecord advance_epoch(RaprState& state,
                          std::vector<LoggedSample> epoch_samples,
                          const RaprConfig& cfg) {
  const std::size_t k = state.num_arms;
  EpochRecord rec;
  rec.m = state.m;
  rec.tau = epoch_end_round(state.m);
  rec.eta = state.eta;
  rec.alpha = state.alpha;
  // In frozen mode the history stops growing, so the active entry is the
  // last one.
  rec.xi =
      state.history[std::min<std::size_t>(state.m, state.history.size()) - 1]
          .xi;
  rec.safe = state.safe;

  RaprConfig eff = cfg;
  eff.xi.dim = state.dim;
  eff.xi.num_arms = k;

  if (!state.safe) {
    // Frozen mode: keep exploring with the safe-epoch kernel and refresh the
    // evaluation estimates on the whole epoch sample.
    const std::size_t m_hat = static_cast<std::size_t>(*state.m_hat);
    refresh_eval_cache(state, epoch_samples,
                       std::span(state.history).first(m_hat), *state.kernel);
    state.last_eval_samples = std::move(epoch_samples);
    state.m += 1;
    state.eta_seq.push_back(state.eta);
    state.alpha_seq.push_back(state.alpha);
    check_state_invariants(state);
    return rec;
  }

  const EpochDataset ds = EpochDataset::make(std::move(epoch_samples));
  const std::vector<LoggedSample> s1 = ds.subset(ds.split1);
  const std::vector<LoggedSample> s2 = ds.subset(ds.split2);
  const std::vector<LoggedSample> s3 = ds.subset(ds.split3);

  const LinearRewardModel f_next =
      fit_reward_model(s1, k, state.dim, eff.ridge_lambda);
  const double xi_next = xi_for_epoch(state.m, eff.delta, eff.xi);
  const EpochHistoryEntry candidate(f_next, state.alpha, xi_next, eff.bloat);

  const std::vector<ContextVector> split2_contexts = contexts_of(s2);
  const double eta_next = choose_eta(state, split2_contexts, candidate, eff);
  const double alpha_next = 3.0 * static_cast<double>(k) / eta_next;

  std::vector<EpochHistoryEntry> next_history = state.history;
  next_history.push_back(candidate);
  auto next_kernel = std::make_shared<ProportionalResponseKernel>(
      next_history, eta_next, k, eff.beta_max);

  const MisspecStats stats =
      misspec_test(state, s3, *next_kernel, f_next, xi_next, eff);
  rec.test = stats;

  refresh_eval_cache(state, s3, next_history, *next_kernel);
  state.last_eval_samples = s3;
  state.history = std::move(next_history);
  if (stats.passed) {
    state.kernel = std::move(next_kernel);
    state.eta = eta_next;
    state.alpha = alpha_next;
  } else {
    // The kernel freezes at p_{m_hat}; the freshly built kernel is discarded.
    state.m_hat = state.m;
    state.safe = false;
  }
  state.m += 1;
  state.eta_seq.push_back(state.eta);
  state.alpha_seq.push_back(state.alpha);
  check_state_invariants(state);
  return rec;
}

FinalPolicy learn_final_policy(const RaprState& state,
                               std::span<const LoggedSample> final_eval,
                               const RaprConfig& cfg) {
  if (cfg.realizability_shortcut) {
    FinalPolicy out;
    out.greedy = GreedyPolicy{state.history.back().model};
    return out;
  }
  if (final_eval.empty())
    throw std::invalid_argument(
        "learn_final_policy: no evaluation samples available");

  RaprConfig eff = cfg;
  eff.xi.dim = state.dim;
  eff.xi.num_arms = state.num_arms;

  const int m_run = state.m;
  const int m_prime =
      std::min(state.m_hat.value_or(m_run), m_run) - 1;
  double weight = 0.0;
  if (m_prime >= 1) {
    const double alpha_mp = state.alpha_seq[m_prime - 1];
    const double xi_run = xi_for_epoch(m_run - 1, eff.delta, eff.xi);
    weight = 0.5 * std::sqrt(alpha_mp * xi_run);
  }
  const std::span<const EpochHistoryEntry> penalty_entries =
      std::span(state.history)
          .first(static_cast<std::size_t>(std::max(m_prime, 0)));

  const std::size_t k = state.num_arms;
  CscProblem problem;
  problem.contexts = contexts_of(final_eval);
  problem.scores.resize(final_eval.size(), std::vector<double>(k));
  for (std::size_t t = 0; t < final_eval.size(); ++t) {
    const LoggedSample& s = final_eval[t];
    for (std::size_t a = 0; a < k; ++a) {
      const int arm = static_cast<int>(a);
      const double ips_term = arm == s.arm ? s.reward / s.propensity : 0.0;
      problem.scores[t][a] =
          ips_term - weight * regret_penalty(penalty_entries, s.context, arm);
    }
  }
  CscSolution sol = csc_argmax(problem, eff.csc_class);
  FinalPolicy out;
  if (sol.policy)
    out.greedy = std::move(*sol.policy);
  else
    out.context_arms = std::move(sol.arms);
  return out;
}

RaprRunResult rapr_run(const Environment& env, long long T,
                       const RaprConfig& cfg, std::uint64_t seed) {
  if (T < 1) throw std::invalid_argument("rapr_run: T must be >= 1");
  const std::size_t k = env.num_arms();
  validate_config(cfg, k);

  RngStream env_rng(seed, kEnvStreamTag);
  RngStream algo_rng(seed, kAlgoStreamTag);

  RaprRunResult result;
  RaprState& st = result.state;
  st = make_initial_state(k, env.dim(), cfg);

  long long t = 0;
  while (t < T) {
    const long long tau_m = epoch_end_round(st.m);
    const long long epoch_end = std::min(tau_m, T);
    std::vector<LoggedSample> samples;
    samples.reserve(static_cast<std::size_t>(epoch_end - t));
    while (t < epoch_end) {
      ++t;
      const ContextVector x = env.sample_context(env_rng);
      std::vector<double> probs = st.kernel->probs(x);
      double total = 0.0;
      for (double p : probs) {
        if (!(p > 0.0))
          throw std::logic_error("kernel invariant violated: p(a|x) <= 0");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9)
        throw std::logic_error("kernel invariant violated: probs do not sum to 1");
      const int arm = st.kernel->sample(x, algo_rng);
      const double reward = env.sample_reward(x, arm, env_rng);
      samples.push_back({x, arm, reward, probs[arm]});
      result.trace.rounds.push_back(
          {t, st.m, x, arm, reward, probs[arm], st.safe, std::move(probs)});
    }
    if (epoch_end == tau_m) {
      result.trace.epochs.push_back(advance_epoch(st, std::move(samples), cfg));
    } else {
      // Partial final epoch: no further fitting happens, so the whole sample
      // becomes the final evaluation set.
      EpochRecord rec;
      rec.m = st.m;
      rec.tau = tau_m;
      rec.eta = st.eta;
      rec.alpha = st.alpha;
      rec.xi = st.history[std::min<std::size_t>(st.m, st.history.size()) - 1].xi;
      rec.safe = st.safe;
      result.trace.epochs.push_back(rec);
      const std::size_t n_models =
          st.safe ? st.history.size()
                  : static_cast<std::size_t>(*st.m_hat);
      refresh_eval_cache(st, samples, std::span(st.history).first(n_models),
                         *st.kernel);
      st.last_eval_samples = std::move(samples);
    }
  }
  result.policy = learn_final_policy(st, st.last_eval_samples, cfg);
  return result;
}

}  // namespace rapr
