#include "rapr/cas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rapr {

EpochHistoryEntry::EpochHistoryEntry(LinearRewardModel model_in,
                                     double alpha_prev_in, double xi_in,
                                     double bloat_in)
    : model(std::move(model_in)),
      alpha_prev(alpha_prev_in),
      xi(xi_in),
      bloat(bloat_in),
      u(bloat_in * std::sqrt(alpha_prev_in * xi_in)) {
  if (!(alpha_prev > 0.0)) throw std::invalid_argument("alpha_prev must be > 0");
  if (!(xi > 0.0) || xi > 1.0)
    throw std::invalid_argument("xi must lie in (0, 1]");
  if (!(bloat > 0.0)) throw std::invalid_argument("bloat must be > 0");
}

namespace {

// Prediction gaps of every arm against the entry's greedy arm; gaps lie in
// [0, 1] because predictions are clamped.
std::vector<double> entry_gaps(const EpochHistoryEntry& e,
                               const ContextVector& x) {
  const std::size_t k = e.model.num_arms();
  std::vector<double> gaps(k);
  const double top = e.model.predict(x, e.model.greedy_arm(x));
  for (std::size_t a = 0; a < k; ++a)
    gaps[a] = top - e.model.predict(x, static_cast<int>(a));
  return gaps;
}

}  // namespace

std::vector<int> cbar_members(std::span<const EpochHistoryEntry> history,
                              const ContextVector& x, double zeta) {
  if (history.empty()) throw std::invalid_argument("empty history");
  if (!(zeta > 0.0)) throw std::invalid_argument("zeta must be > 0");
  const std::size_t k = history.front().model.num_arms();
  std::vector<char> in(k, 1);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double mbar = static_cast<double>(i + 1);
    const double threshold = history[i].u * 2.0 * mbar * mbar / zeta;
    const std::vector<double> gaps = entry_gaps(history[i], x);
    for (std::size_t a = 0; a < k; ++a)
      if (gaps[a] > threshold) in[a] = 0;
  }
  std::vector<int> members;
  for (std::size_t a = 0; a < k; ++a)
    if (in[a]) members.push_back(static_cast<int>(a));
  return members;
}

std::vector<int> cas_members(std::span<const EpochHistoryEntry> history,
                             const ContextVector& x, double zeta) {
  std::vector<int> members = cbar_members(history, x, zeta);
  const int greedy = history.back().model.greedy_arm(x);
  if (!std::binary_search(members.begin(), members.end(), greedy)) {
    members.push_back(greedy);
    std::sort(members.begin(), members.end());
  }
  return members;
}

double membership_beta(std::span<const EpochHistoryEntry> history, double eta,
                       const ContextVector& x, int arm, double beta_max) {
  if (history.empty()) throw std::invalid_argument("empty history");
  if (!(eta >= 1.0)) throw std::invalid_argument("eta must be >= 1");
  if (history.back().model.greedy_arm(x) == arm) return beta_max;
  double ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < history.size(); ++i) {
    const EpochHistoryEntry& e = history[i];
    const double gap =
        e.model.predict(x, e.model.greedy_arm(x)) - e.model.predict(x, arm);
    if (gap <= 0.0) continue;  // zero gap never constrains membership
    const double mbar = static_cast<double>(i + 1);
    ratio = std::min(ratio, 2.0 * mbar * mbar * e.u / gap);
  }
  return std::min(beta_max, eta * ratio);
}

double mean_cbar_size(std::span<const EpochHistoryEntry> history, double eta,
                      std::span<const ContextVector> contexts,
                      double beta_max) {
  if (contexts.empty()) throw std::invalid_argument("empty context set");
  const double zeta = beta_max / eta;
  double total = 0.0;
  for (const ContextVector& x : contexts)
    total += static_cast<double>(cbar_members(history, x, zeta).size());
  return total / static_cast<double>(contexts.size());
}

ProportionalResponseKernel::ProportionalResponseKernel(
    std::vector<EpochHistoryEntry> history, double eta, std::size_t num_arms,
    double beta_max)
    : history_(std::move(history)),
      eta_(eta),
      num_arms_(num_arms),
      beta_max_(beta_max) {
  if (history_.empty()) throw std::invalid_argument("empty history");
  if (!(eta_ >= 1.0)) throw std::invalid_argument("eta must be >= 1");
  if (!(beta_max_ > 0.0 && beta_max_ < 1.0))
    throw std::invalid_argument("beta_max must lie in (0, 1)");
  for (const auto& e : history_)
    if (e.model.num_arms() != num_arms_)
      throw std::invalid_argument("history arm count mismatch");
}

std::vector<double> ProportionalResponseKernel::breakpoints(
    const ContextVector& x) const {
  // Same quantity as membership_beta per arm, with each entry's predictions
  // evaluated once per context instead of once per arm.
  std::vector<double> ratio(num_arms_,
                            std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < history_.size(); ++i) {
    const EpochHistoryEntry& e = history_[i];
    const double mbar = static_cast<double>(i + 1);
    const double scale = 2.0 * mbar * mbar * e.u;
    double top = e.model.predict(x, 0);
    std::vector<double> pred(num_arms_);
    pred[0] = top;
    for (std::size_t a = 1; a < num_arms_; ++a) {
      pred[a] = e.model.predict(x, static_cast<int>(a));
      top = std::max(top, pred[a]);
    }
    for (std::size_t a = 0; a < num_arms_; ++a) {
      const double gap = top - pred[a];
      if (gap > 0.0) ratio[a] = std::min(ratio[a], scale / gap);
    }
  }
  std::vector<double> b(num_arms_);
  for (std::size_t a = 0; a < num_arms_; ++a)
    b[a] = std::min(beta_max_, eta_ * ratio[a]);
  b[history_.back().model.greedy_arm(x)] = beta_max_;
  return b;
}

ProportionalResponseKernel::ContextSampler
ProportionalResponseKernel::context_sampler(const ContextVector& x) const {
  ContextSampler s;
  s.breakpoints_ = breakpoints(x);
  s.beta_max_ = beta_max_;
  return s;
}

int ProportionalResponseKernel::ContextSampler::sample(RngStream& rng) const {
  const double beta = std::min(rng.uniform01(), beta_max_);
  int count = 0;
  for (double b : breakpoints_)
    if (b >= beta) ++count;
  int j = rng.uniform_int(count);
  for (std::size_t a = 0; a < breakpoints_.size(); ++a)
    if (breakpoints_[a] >= beta && j-- == 0) return static_cast<int>(a);
  return static_cast<int>(breakpoints_.size()) - 1;  // unreachable
}

std::vector<double> ProportionalResponseKernel::probs(
    const ContextVector& x) const {
  const std::vector<double> b = breakpoints(x);

  // C(beta) = {a : b[a] >= beta} is piecewise constant between breakpoints,
  // so the beta integral is a finite sum; interval boundaries carry no mass.
  std::vector<double> cuts = b;
  cuts.push_back(0.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<double> p(num_arms_, 0.0);
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double lo = cuts[j];
    const double hi = cuts[j + 1];
    std::size_t size = 0;
    for (double v : b)
      if (v >= hi) ++size;
    const double mass = (hi - lo) / static_cast<double>(size);
    for (std::size_t a = 0; a < num_arms_; ++a)
      if (b[a] >= hi) p[a] += mass;
  }

  std::size_t top_size = 0;
  for (double v : b)
    if (v >= beta_max_) ++top_size;
  const double top_mass = (1.0 - beta_max_) / static_cast<double>(top_size);
  for (std::size_t a = 0; a < num_arms_; ++a)
    if (b[a] >= beta_max_) p[a] += top_mass;
  return p;
}

double ProportionalResponseKernel::prob(const ContextVector& x,
                                        int arm) const {
  if (arm < 0 || static_cast<std::size_t>(arm) >= num_arms_)
    throw std::invalid_argument("arm index out of range");
  return probs(x)[arm];
}

int ProportionalResponseKernel::sample(const ContextVector& x,
                                       RngStream& rng) const {
  // Draw beta uniformly, then uniformly from C(x, min(beta, beta_max)/eta);
  // that set is exactly the arms whose breakpoint is at least beta.
  return context_sampler(x).sample(rng);
}

}  // namespace rapr
