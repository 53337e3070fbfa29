#include "rapr/envs.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace rapr {

BallDgp::BallDgp() : BallDgp(Options()) {}

BallDgp::BallDgp(Options opt) : opt_(opt) {
  arm_params_ = {{1.0, 0.0},   {-1.0, 0.0},  {0.0, 1.0},   {0.0, -1.0},
                 {0.4, 0.6},   {0.6, 0.4},   {-0.4, -0.6}, {-0.6, -0.4}};
  if (opt_.full_arm_set) {
    arm_params_.push_back({0.4, -0.6});
    arm_params_.push_back({0.6, -0.4});
    arm_params_.push_back({-0.4, 0.6});
    arm_params_.push_back({-0.6, 0.4});
  }
}

ContextVector BallDgp::sample_context(RngStream& rng) const {
  const double x1 = rng.uniform(0.8, 1.0);
  const double z = rng.uniform_int(2) == 0 ? -1.0 : 1.0;
  const double x2 = std::sqrt(1.0 - x1 * x1) * z;
  switch (rng.uniform_int(4)) {
    case 0: return {x1, x2};
    case 1: return {x2, x1};
    case 2: return {-x1, -x2};
    default: return opt_.region_fix ? ContextVector{-x2, -x1}
                                    : ContextVector{-x1, -x2};
  }
}

double BallDgp::mean_reward(const ContextVector& x, int arm) const {
  if (arm < 0 || static_cast<std::size_t>(arm) >= arm_params_.size())
    throw std::invalid_argument("arm index out of range");
  if (x.size() != 2) throw std::invalid_argument("context must have dim 2");
  const auto& theta = arm_params_[arm];
  return 0.4 + opt_.reward_scale * (theta[0] * x[0] + theta[1] * x[1]);
}

double BallDgp::sample_reward(const ContextVector& x, int arm,
                              RngStream& rng) const {
  const double noise =
      rng.uniform(-opt_.noise_half_width, opt_.noise_half_width);
  const double r = mean_reward(x, arm) + noise;
  return opt_.clamp_rewards ? std::clamp(r, 0.0, 1.0) : r;
}

namespace {

// Affine environment with an exact gap structure. The `top_arms` leading
// arms share one predictor; the rest sit `gap + slack - tilt * x1` below it,
// so Pr(gap condition fails) equals lambda for the tilted construction and
// zero when the gaps are uniform.
class GapInstance final : public Environment {
 public:
  GapInstance(std::size_t num_arms, std::size_t dim, std::size_t top_arms,
              double lambda, double gap, GapOptions options)
      : num_arms_(num_arms),
        dim_(dim),
        top_arms_(top_arms),
        lambda_(lambda),
        gap_(gap),
        top_intercept_(options.top_mean),
        noise_half_width_(options.noise_half_width) {
    if (num_arms_ < 1 || dim_ < 1)
      throw std::invalid_argument("gap instance: need arms and dim >= 1");
    if (top_arms_ < 1 || top_arms_ > num_arms_)
      throw std::invalid_argument("gap instance: top_arms must lie in [1, K]");
    if (!(gap_ > 0.0) || gap_ > 1.0)
      throw std::invalid_argument("gap instance: gap must lie in (0, 1]");
    if (lambda_ < 0.0 || lambda_ > 1.0)
      throw std::invalid_argument("gap instance: lambda must lie in [0, 1]");
    if (lambda_ > 0.0) {
      tilt_ = 0.1;
      slack_ = tilt_ * (1.0 - 2.0 * lambda_);
    }
    const double sub_min = top_intercept_ - gap_ - slack_ - kappa_ - tilt_;
    if (sub_min < 0.0 || top_intercept_ + kappa_ > 1.0)
      throw std::invalid_argument(
          "gap instance: gap exceeds the achievable spread");
  }

  std::size_t dim() const override { return dim_; }
  std::size_t num_arms() const override { return num_arms_; }

  ContextVector sample_context(RngStream& rng) const override {
    ContextVector x(dim_);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    return x;
  }

  double mean_reward(const ContextVector& x, int arm) const override {
    if (arm < 0 || static_cast<std::size_t>(arm) >= num_arms_)
      throw std::invalid_argument("arm index out of range");
    if (x.size() != dim_) throw std::invalid_argument("context dim mismatch");
    const double top = top_intercept_ + kappa_ * x[0];
    if (static_cast<std::size_t>(arm) < top_arms_) return top;
    return top - gap_ - slack_ + tilt_ * x[0];
  }

  double sample_reward(const ContextVector& x, int arm,
                       RngStream& rng) const override {
    // Both noise modes keep the conditional mean exactly affine.
    const double mean = mean_reward(x, arm);
    if (noise_half_width_ < 0.0)
      return rng.uniform01() < mean ? 1.0 : 0.0;
    const double h = std::min({noise_half_width_, mean, 1.0 - mean});
    return mean + rng.uniform(-h, h);
  }

 private:
  std::size_t num_arms_, dim_, top_arms_;
  double lambda_, gap_;
  double top_intercept_;
  double noise_half_width_;
  double kappa_ = 0.05;
  double tilt_ = 0.0;
  double slack_ = 0.0;
};

// Low-frequency sign bump: constant regions wide enough that greedy policies
// of affine scorers can select the favorable arm per region, which is what
// makes the bias visible to policy-level evaluation.
double bump(const ContextVector& x, int arm, std::size_t num_arms) {
  const double phase = M_PI * x[0] +
                       2.0 * M_PI * static_cast<double>(arm) /
                           static_cast<double>(num_arms) +
                       0.7;
  return std::sin(phase) >= 0.0 ? 0.5 : -0.5;
}

}  // namespace

std::shared_ptr<Environment> make_gap_instance(std::size_t num_arms,
                                               std::size_t dim,
                                               std::size_t top_arms,
                                               double lambda, double gap,
                                               GapOptions options) {
  return std::make_shared<GapInstance>(num_arms, dim, top_arms, lambda, gap,
                                       options);
}

MisspecifiedEnv::MisspecifiedEnv(std::shared_ptr<const Environment> base,
                                 double distortion)
    : base_(std::move(base)), distortion_(distortion) {
  if (!base_) throw std::invalid_argument("null base environment");
  if (distortion_ < 0.0)
    throw std::invalid_argument("distortion must be >= 0");
}

double MisspecifiedEnv::mean_reward(const ContextVector& x, int arm) const {
  if (distortion_ == 0.0) return base_->mean_reward(x, arm);
  const double m = base_->mean_reward(x, arm) +
                   distortion_ * bump(x, arm, base_->num_arms());
  return std::clamp(m, 0.0, 1.0);
}

double MisspecifiedEnv::sample_reward(const ContextVector& x, int arm,
                                      RngStream& rng) const {
  if (distortion_ == 0.0) return base_->sample_reward(x, arm, rng);
  return rng.uniform01() < mean_reward(x, arm) ? 1.0 : 0.0;
}

double MisspecifiedEnv::estimate_bias(std::size_t n_contexts,
                                      std::uint64_t seed) const {
  RngStream rng(seed, 0x6261u);
  const std::size_t d = dim();
  const std::size_t k = num_arms();
  std::vector<ContextVector> xs(n_contexts);
  for (auto& x : xs) x = sample_context(rng);

  // Per-arm least squares of the distorted mean on (x, 1); under uniform
  // logging the class-optimal model decomposes across arms.
  double sq_err = 0.0;
  Eigen::MatrixXd design(n_contexts, d + 1);
  for (std::size_t i = 0; i < n_contexts; ++i) {
    for (std::size_t j = 0; j < d; ++j) design(i, j) = xs[i][j];
    design(i, d) = 1.0;
  }
  const auto decomposition = design.completeOrthogonalDecomposition();
  for (std::size_t a = 0; a < k; ++a) {
    Eigen::VectorXd y(n_contexts);
    for (std::size_t i = 0; i < n_contexts; ++i)
      y(i) = mean_reward(xs[i], static_cast<int>(a));
    const Eigen::VectorXd theta = decomposition.solve(y);
    for (std::size_t i = 0; i < n_contexts; ++i) {
      const double pred =
          std::clamp(design.row(i).dot(theta), 0.0, 1.0);
      const double e = pred - y(i);
      sq_err += e * e;
    }
  }
  return sq_err / static_cast<double>(n_contexts * k);
}

std::optional<double> MisspecifiedEnv::bias_b() const {
  if (!cached_bias_) cached_bias_ = estimate_bias(200000, 0x42u);
  return cached_bias_;
}

std::shared_ptr<Environment> make_misspecified(
    std::shared_ptr<const Environment> base, double distortion) {
  return std::make_shared<MisspecifiedEnv>(std::move(base), distortion);
}

}  // namespace rapr
