#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rapr/envs.hpp"
#include "rapr/rng.hpp"

using namespace rapr;

TEST_CASE("ball contexts live on the unit circle with x1-heavy magnitude") {
  const BallDgp env;
  RngStream rng(1);
  for (int i = 0; i < 20000; ++i) {
    const ContextVector x = env.sample_context(rng);
    CHECK(std::abs(x[0] * x[0] + x[1] * x[1] - 1.0) < 1e-12);
    CHECK(std::max(std::abs(x[0]), std::abs(x[1])) >= 0.8 - 1e-12);
    CHECK(std::max(std::abs(x[0]), std::abs(x[1])) <= 1.0);
  }
}

TEST_CASE("ball regions: verbatim text doubles the negative region") {
  const BallDgp env;
  RngStream rng(2);
  int quads[4] = {0, 0, 0, 0};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const ContextVector x = env.sample_context(rng);
    const bool big_first = std::abs(x[0]) >= std::abs(x[1]);
    const bool negative = (x[0] + x[1]) < 0.0;
    quads[(big_first ? 0 : 1) + (negative ? 2 : 0)]++;
  }
  // branches: (x1,x2) 25%, (x2,x1) 25%, (-x1,-x2) 50%
  CHECK(std::abs(quads[0] / double(n) - 0.25) < 0.01);
  CHECK(std::abs(quads[1] / double(n) - 0.25) < 0.01);
  CHECK(std::abs(quads[2] / double(n) - 0.50) < 0.01);
  CHECK(quads[3] < n / 100);
}

TEST_CASE("ball regions: the symmetric variant balances all four branches") {
  BallDgp::Options opt;
  opt.region_fix = true;
  const BallDgp env(opt);
  RngStream rng(3);
  int quads[4] = {0, 0, 0, 0};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const ContextVector x = env.sample_context(rng);
    const bool big_first = std::abs(x[0]) >= std::abs(x[1]);
    const bool negative = (x[0] + x[1]) < 0.0;
    quads[(big_first ? 0 : 1) + (negative ? 2 : 0)]++;
  }
  for (int q = 0; q < 4; ++q)
    CHECK(std::abs(quads[q] / double(n) - 0.25) < 0.01);
}

TEST_CASE("ball mean rewards stay in [0.2, 0.6] and hit the endpoints") {
  const BallDgp env;
  CHECK(env.mean_reward({1.0, 0.0}, 0) == doctest::Approx(0.6));
  CHECK(env.mean_reward({-1.0, 0.0}, 0) == doctest::Approx(0.2));
  RngStream rng(4);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 200000; ++i) {
    const ContextVector x = env.sample_context(rng);
    for (int a = 0; a < static_cast<int>(env.num_arms()); ++a) {
      const double m = env.mean_reward(x, a);
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
  }
  CHECK(lo >= 0.2 - 1e-12);
  CHECK(hi <= 0.6 + 1e-12);
  CHECK(lo < 0.23);
  CHECK(hi > 0.57);
}

TEST_CASE("ball arm sets: eight matching-sign arms, twelve with the variant") {
  CHECK(BallDgp().num_arms() == 8);
  BallDgp::Options opt;
  opt.full_arm_set = true;
  const BallDgp full(opt);
  CHECK(full.num_arms() == 12);
  for (const auto& theta : full.arm_params())
    CHECK(std::abs(theta[0]) + std::abs(theta[1]) == doctest::Approx(1.0));
}

TEST_CASE("ball reward noise is centered and optionally clamped") {
  const BallDgp env;
  RngStream rng(5);
  const ContextVector x{1.0, 0.0};
  double mean = 0.0, lo = 1.0, hi = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double r = env.sample_reward(x, 0, rng);
    mean += r;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  mean /= n;
  // true mean 0.6, noise sd 0.4/sqrt(3)
  CHECK(std::abs(mean - 0.6) < 3.0 * (0.4 / std::sqrt(3.0)) / std::sqrt(n));
  CHECK(hi <= 1.0 + 1e-12);
  CHECK(lo < 0.25);  // unclamped mode reaches below 0.2 at this context

  BallDgp::Options opt;
  opt.clamp_rewards = true;
  const BallDgp clamped(opt);
  for (int i = 0; i < 10000; ++i) {
    const double r = clamped.sample_reward({-1.0, 0.0}, 0, rng);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("gap instance: uniform-gap construction verified by scanning") {
  const auto env = make_gap_instance(2, 1, 1, 0.0, 0.3);
  RngStream rng(6);
  for (int i = 0; i < 10000; ++i) {
    const ContextVector x = env->sample_context(rng);
    const double g = env->mean_reward(x, 0) - env->mean_reward(x, 1);
    CHECK(g == doctest::Approx(0.3));
    CHECK(env->mean_reward(x, 0) <= 1.0);
    CHECK(env->mean_reward(x, 1) >= 0.0);
  }
}

TEST_CASE("gap instance: declared (A, lambda, gap) verified by scanning") {
  for (double lambda : {0.0, 0.25, 1.0}) {
    const std::size_t top = lambda == 1.0 ? 4 : 2;
    const auto env = make_gap_instance(4, 2, top, lambda, 0.3);
    RngStream rng(7);
    int fails = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const ContextVector x = env->sample_context(rng);
      const double best = env->best_mean(x);
      std::size_t within = 0;
      for (int a = 0; a < 4; ++a)
        if (best - env->mean_reward(x, a) < 0.3) ++within;
      if (within > top) ++fails;
    }
    // condition must fail on at most a lambda fraction of contexts
    CHECK(fails <= static_cast<int>(lambda * n) + 3 * std::sqrt(n * 0.25) + 1);
    if (lambda == 0.0) CHECK(fails == 0);
  }
}

TEST_CASE("gap instance: A = K makes the condition vacuous") {
  const auto env = make_gap_instance(3, 1, 3, 0.0, 0.5);
  RngStream rng(8);
  const ContextVector x = env->sample_context(rng);
  CHECK(env->num_arms() == 3);
  CHECK(env->mean_reward(x, 0) == env->mean_reward(x, 2));
}

TEST_CASE("gap instance rejects infeasible spreads") {
  CHECK_THROWS_AS(make_gap_instance(2, 1, 1, 0.0, 0.95),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_gap_instance(2, 1, 0, 0.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(make_gap_instance(2, 1, 1, 1.5, 0.3), std::invalid_argument);
}

TEST_CASE("sampled rewards match the declared conditional means") {
  const auto env = make_gap_instance(3, 2, 1, 0.0, 0.4);
  RngStream rng(9);
  const ContextVector x = env->sample_context(rng);
  for (int a = 0; a < 3; ++a) {
    double mean = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) mean += env->sample_reward(x, a, rng);
    mean /= n;
    const double p = env->mean_reward(x, a);
    CHECK(std::abs(mean - p) < 3.0 * std::sqrt(p * (1 - p) / n) + 1e-4);
  }
}

TEST_CASE("misspecified wrapper: zero distortion is the base environment") {
  const auto base = make_gap_instance(3, 1, 1, 0.0, 0.3);
  const auto env = make_misspecified(base, 0.0);
  RngStream rng(10);
  for (int i = 0; i < 100; ++i) {
    const ContextVector x = env->sample_context(rng);
    for (int a = 0; a < 3; ++a)
      CHECK(env->mean_reward(x, a) == base->mean_reward(x, a));
  }
  CHECK(*env->bias_b() < 1e-6);
}

TEST_CASE("misspecified wrapper: distortion creates measurable bias") {
  const auto base = make_gap_instance(3, 1, 1, 0.0, 0.3);
  const auto env = std::make_shared<MisspecifiedEnv>(base, 0.5);
  const double b1 = env->estimate_bias(1000000, 21);
  const double b2 = env->estimate_bias(1000000, 22);
  CHECK(b1 > 0.01);
  CHECK(std::abs(b1 - b2) / b1 < 0.05);
  RngStream rng(11);
  for (int i = 0; i < 1000; ++i) {
    const ContextVector x = env->sample_context(rng);
    for (int a = 0; a < 3; ++a) {
      CHECK(env->mean_reward(x, a) >= 0.0);
      CHECK(env->mean_reward(x, a) <= 1.0);
    }
  }
}
