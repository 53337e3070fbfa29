#pragma once

#include <memory>
#include <span>
#include <vector>

#include "rapr/core.hpp"

namespace rapr {

// Frozen per-epoch record consumed by the conformal-arm-set machinery.
// Entry m-bar carries the model fitted at the end of epoch m-bar - 1 together
// with the width ingredients alpha_{m-bar-1} and xi_{m-bar}; entries are
// immutable and append-only across epochs.
struct EpochHistoryEntry {
  LinearRewardModel model;
  double alpha_prev;  // in [1, 3K]
  double xi;          // in (0, 1]
  double bloat;       // width constant, 20 by default, 1 in the simulation
  double u;           // bloat * sqrt(alpha_prev * xi)

  EpochHistoryEntry(LinearRewardModel model_in, double alpha_prev_in,
                    double xi_in, double bloat_in);
};

// C_m(x, zeta): the latest model's greedy arm united with the intersection,
// over all history levels m-bar, of the arms whose prediction gap under
// f-hat_{m-bar} is at most u_{m-bar} * 2 m-bar^2 / zeta. Never empty.
std::vector<int> cas_members(std::span<const EpochHistoryEntry> history,
                             const ContextVector& x, double zeta);

// Intersection part only (no greedy-arm union); may be empty.
std::vector<int> cbar_members(std::span<const EpochHistoryEntry> history,
                              const ContextVector& x, double zeta);

// Largest beta in [0, beta_max] such that `arm` lies in C_m(x, beta / eta):
// beta_max for the greedy arm, otherwise
// min(beta_max, eta * min_{m-bar} 2 m-bar^2 u_{m-bar} / gap_{m-bar}).
double membership_beta(std::span<const EpochHistoryEntry> history, double eta,
                       const ContextVector& x, int arm, double beta_max = 0.5);

// Mean over contexts of |Cbar(x, beta_max / eta)|; the empirical term of the
// risk-adjustment objective.
double mean_cbar_size(std::span<const EpochHistoryEntry> history, double eta,
                      std::span<const ContextVector> contexts,
                      double beta_max = 0.5);

// Exploration distribution built from the history and the risk-adjustment
// parameter eta: sample beta uniformly from [0, 1], then sample uniformly
// from C(x, min(beta, beta_max) / eta). Probabilities are exact; the sets
// C(x, beta/eta) are nested in beta, so the integral over beta is a finite
// sum over per-arm breakpoints. Immutable after construction; prob/sample
// may be called concurrently with caller-owned rng streams.
class ProportionalResponseKernel final : public ActionKernel {
 public:
  ProportionalResponseKernel(std::vector<EpochHistoryEntry> history,
                             double eta, std::size_t num_arms,
                             double beta_max = 0.5);

  std::size_t num_arms() const override { return num_arms_; }
  double prob(const ContextVector& x, int arm) const override;
  std::vector<double> probs(const ContextVector& x) const override;
  int sample(const ContextVector& x, RngStream& rng) const override;

  // Per-arm membership breakpoints at x, each in [0, beta_max].
  std::vector<double> breakpoints(const ContextVector& x) const;

  // Repeated sampling at one context: the breakpoints are computed once and
  // every draw costs O(K). Distributionally identical to sample().
  class ContextSampler {
   public:
    int sample(RngStream& rng) const;

   private:
    friend class ProportionalResponseKernel;
    std::vector<double> breakpoints_;
    double beta_max_;
  };
  ContextSampler context_sampler(const ContextVector& x) const;

  const std::vector<EpochHistoryEntry>& history() const { return history_; }
  double eta() const { return eta_; }
  double beta_max() const { return beta_max_; }

 private:
  std::vector<EpochHistoryEntry> history_;
  double eta_;
  std::size_t num_arms_;
  double beta_max_;
};

using KernelPtr = std::shared_ptr<const ProportionalResponseKernel>;

}  // namespace rapr
