#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rapr {

// Deterministic random stream. All randomness in the library flows through
// this wrapper so traces are reproducible bit-for-bit for a fixed seed;
// std::* distributions are avoided because their draw sequences are
// implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  RngStream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream & 0xffffffffu),
                      static_cast<std::uint32_t>(stream >> 32)};
    eng_.seed(seq);
  }

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1).
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). Rejection sampling keeps the draw unbiased.
  int uniform_int(int n) {
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t v = eng_();
    while (v >= limit) v = eng_();
    return static_cast<int>(v % un);
  }

  // Standard normal via Box-Muller; one value per call.
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 eng_;
};

// Stream tags used to split one run seed into independent substreams.
inline constexpr std::uint64_t kEnvStreamTag = 0xE57;
inline constexpr std::uint64_t kAlgoStreamTag = 0xA16;
inline constexpr std::uint64_t kEvalStreamTag = 0xE7A1;

}  // namespace rapr
