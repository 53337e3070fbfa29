#include "rapr/oracles.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rapr {

double XiRateConfig::rate(double n, double delta_prime) const {
  if (n <= 0.0) throw std::invalid_argument("xi rate: n must be positive");
  const double c2 = scale_c * scale_c;
  const double d = static_cast<double>(dim);
  if (mode == Mode::kSimulation) return c2 * d / n;
  if (delta_prime <= 0.0 || delta_prime >= 1.0)
    throw std::invalid_argument("xi rate: delta' must lie in (0,1)");
  const double k = static_cast<double>(num_arms);
  return c2 * d * std::log(std::max(n, 2.0) * k / delta_prime) / n;
}

long long epoch_end_round(int m) {
  if (m < 0) throw std::invalid_argument("epoch index must be >= 0");
  if (m == 0) return 0;
  return 3LL << (m - 1);  // tau_1 = 3, doubling
}

double xi_for_epoch(int m, double delta, const XiRateConfig& cfg) {
  if (m < 1) throw std::invalid_argument("xi_for_epoch: m must be >= 1");
  if (delta <= 0.0 || delta >= 1.0)
    throw std::invalid_argument("xi_for_epoch: delta must lie in (0,1)");
  const double n =
      static_cast<double>(epoch_end_round(m) - epoch_end_round(m - 1)) / 3.0;
  const double md = static_cast<double>(m);
  const double delta_prime = delta / (16.0 * md * md * md);
  return std::min(1.0, 2.0 * cfg.rate(n, delta_prime));
}

namespace {

// Solves one arm's penalized least squares on rows (x_i, 1) -> y_i.
void fit_arm(const std::vector<const LoggedSample*>& rows, std::size_t dim,
             double ridge_lambda, std::vector<double>* weights,
             double* intercept) {
  const std::size_t n = rows.size();
  const std::size_t p = dim + 1;
  Eigen::MatrixXd design(n, p);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LoggedSample& s = *rows[i];
    if (s.context.size() != dim)
      throw std::invalid_argument("fit_reward_model: context dim mismatch");
    for (std::size_t j = 0; j < dim; ++j) design(i, j) = s.context[j];
    design(i, dim) = 1.0;
    y(i) = s.reward;
  }
  Eigen::VectorXd theta(p);
  if (ridge_lambda > 0.0) {
    Eigen::MatrixXd normal = design.transpose() * design;
    for (std::size_t j = 0; j < dim; ++j) normal(j, j) += ridge_lambda;
    theta = normal.ldlt().solve(design.transpose() * y);
  } else {
    // Minimum-norm least squares; coincides with the unique solution on
    // full-rank designs.
    theta = design.completeOrthogonalDecomposition().solve(y);
  }
  weights->assign(theta.data(), theta.data() + dim);
  *intercept = theta(dim);
}

}  // namespace

LinearRewardModel fit_reward_model(std::span<const LoggedSample> samples,
                                   std::size_t num_arms, std::size_t dim,
                                   double ridge_lambda) {
  if (ridge_lambda < 0.0)
    throw std::invalid_argument("fit_reward_model: ridge_lambda must be >= 0");
  std::vector<std::vector<const LoggedSample*>> by_arm(num_arms);
  for (const LoggedSample& s : samples) {
    if (s.arm < 0 || static_cast<std::size_t>(s.arm) >= num_arms)
      throw std::invalid_argument("fit_reward_model: arm index out of range");
    by_arm[s.arm].push_back(&s);
  }
  std::vector<std::vector<double>> weights(num_arms,
                                           std::vector<double>(dim, 0.0));
  std::vector<double> intercepts(num_arms, 0.0);
  for (std::size_t a = 0; a < num_arms; ++a) {
    if (by_arm[a].empty()) continue;  // zero predictor
    fit_arm(by_arm[a], dim, ridge_lambda, &weights[a], &intercepts[a]);
  }
  return LinearRewardModel(std::move(weights), std::move(intercepts));
}

namespace {

template <typename TargetProb>
double ips_value_impl(std::span<const LoggedSample> samples,
                      TargetProb&& target_prob) {
  if (samples.empty())
    throw std::invalid_argument("ips_value: empty sample set");
  double total = 0.0;
  for (const LoggedSample& s : samples) {
    if (!(s.propensity > 0.0))
      throw std::invalid_argument("ips_value: nonpositive propensity");
    total += target_prob(s.context, s.arm) * s.reward / s.propensity;
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace

double ips_value(std::span<const LoggedSample> samples,
                 const GreedyPolicy& target) {
  return ips_value_impl(
      samples, [&](const ContextVector& x, int a) { return target.prob(x, a); });
}

double ips_value(std::span<const LoggedSample> samples,
                 const ActionKernel& target) {
  return ips_value_impl(
      samples, [&](const ContextVector& x, int a) { return target.prob(x, a); });
}

double model_value(std::span<const LoggedSample> samples,
                   const LinearRewardModel& f, const GreedyPolicy& target) {
  if (samples.empty())
    throw std::invalid_argument("model_value: empty sample set");
  double total = 0.0;
  for (const LoggedSample& s : samples)
    total += f.predict(s.context, target.action(s.context));
  return total / static_cast<double>(samples.size());
}

double model_value(std::span<const LoggedSample> samples,
                   const LinearRewardModel& f, const ActionKernel& target) {
  if (samples.empty())
    throw std::invalid_argument("model_value: empty sample set");
  double total = 0.0;
  for (const LoggedSample& s : samples) {
    const std::vector<double> p = target.probs(s.context);
    for (std::size_t a = 0; a < p.size(); ++a)
      total += p[a] * f.predict(s.context, static_cast<int>(a));
  }
  return total / static_cast<double>(samples.size());
}

CscSolution csc_argmax(const CscProblem& problem, PolicyClass policy_class) {
  const std::size_t n = problem.contexts.size();
  if (n == 0 || problem.scores.size() != n)
    throw std::invalid_argument("csc_argmax: empty or inconsistent problem");
  const std::size_t num_arms = problem.scores[0].size();
  const double sign = problem.maximize ? 1.0 : -1.0;
  for (const auto& row : problem.scores) {
    if (row.size() != num_arms)
      throw std::invalid_argument("csc_argmax: ragged score table");
    for (double v : row)
      if (!std::isfinite(v))
        throw std::invalid_argument("csc_argmax: non-finite score");
  }

  CscSolution out;
  out.arms.resize(n);

  if (policy_class == PolicyClass::kUniversal) {
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      int best = 0;
      double best_v = sign * problem.scores[t][0];
      for (std::size_t a = 1; a < num_arms; ++a) {
        const double v = sign * problem.scores[t][a];
        if (v > best_v) {
          best = static_cast<int>(a);
          best_v = v;
        }
      }
      out.arms[t] = best;
      total += problem.scores[t][best];
    }
    out.mean_score = total / static_cast<double>(n);
    return out;
  }

  // Regression reduction: fit an affine scorer to the score table, one least
  // squares per arm with every context contributing a row, then act greedily
  // with respect to the fitted scorer. Scores are unbounded, so the scorer is
  // built without output clamping.
  const std::size_t dim = problem.contexts[0].size();
  std::vector<std::vector<double>> weights(num_arms,
                                           std::vector<double>(dim, 0.0));
  std::vector<double> intercepts(num_arms, 0.0);
  Eigen::MatrixXd design(n, dim + 1);
  for (std::size_t t = 0; t < n; ++t) {
    if (problem.contexts[t].size() != dim)
      throw std::invalid_argument("csc_argmax: context dim mismatch");
    for (std::size_t j = 0; j < dim; ++j) design(t, j) = problem.contexts[t][j];
    design(t, dim) = 1.0;
  }
  const auto decomposition = design.completeOrthogonalDecomposition();
  for (std::size_t a = 0; a < num_arms; ++a) {
    Eigen::VectorXd y(n);
    for (std::size_t t = 0; t < n; ++t) y(t) = sign * problem.scores[t][a];
    const Eigen::VectorXd theta = decomposition.solve(y);
    weights[a].assign(theta.data(), theta.data() + dim);
    intercepts[a] = theta(dim);
  }
  const double wide = std::numeric_limits<double>::max();
  GreedyPolicy policy{LinearRewardModel(std::move(weights),
                                        std::move(intercepts), -wide, wide)};
  double total = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    out.arms[t] = policy.action(problem.contexts[t]);
    total += problem.scores[t][out.arms[t]];
  }
  out.mean_score = total / static_cast<double>(n);
  out.policy = std::move(policy);
  return out;
}

}  // namespace rapr
