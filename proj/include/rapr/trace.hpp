#pragma once

#include <optional>
#include <vector>

#include "rapr/core.hpp"

namespace rapr {

struct MisspecStats {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double rhs = 0.0;
  bool passed = true;
};

struct RoundRecord {
  long long t = 0;
  int epoch = 1;
  ContextVector context;
  int arm = 0;
  double reward = 0.0;
  double propensity = 1.0;
  bool safe = true;
  // Full arm distribution at this round; kept in memory for exact regret
  // computation, not serialized.
  std::vector<double> probs;
};

struct EpochRecord {
  int m = 1;
  long long tau = 0;
  double eta = 1.0;
  double alpha = 0.0;
  double xi = 1.0;  // xi_m of the entry active during the epoch
  bool safe = true;
  std::optional<MisspecStats> test;
};

struct RunTrace {
  std::vector<RoundRecord> rounds;
  std::vector<EpochRecord> epochs;
};

}  // namespace rapr
