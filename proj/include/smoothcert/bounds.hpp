#pragma once

// Closed-form robustness bounds for randomized smoothing: generalized means,
// the Renyi-divergence lower bound for flipping the top class, certified l2
// (Gaussian) and l1 (Laplacian) radii, and the PixelDP baseline radius.
//
// Everything in this header is a pure function of its arguments.

#include <cstddef>
#include <span>

namespace smoothcert::bounds {

// Slack admitted on p1 + p2 <= 1 so that interval endpoints which sum to one
// mathematically are not rejected over a rounding ulp.
inline constexpr double kProbabilitySumSlack = 1e-12;

// Largest and second-largest class probabilities of a stochastic classifier.
// Construction enforces 0 <= p2 <= p1 <= 1 and p1 + p2 <= 1.
class TopTwo {
 public:
  TopTwo(double first, double second);

  double first() const noexcept { return first_; }
  double second() const noexcept { return second_; }

 private:
  double first_;
  double second_;
};

// Order of a Renyi divergence, strictly greater than one.
class RenyiOrder {
 public:
  explicit RenyiOrder(double alpha);

  double value() const noexcept { return alpha_; }

 private:
  double alpha_;
};

enum class NoiseKind { gaussian, laplacian };

// Per-coordinate noise law: Gaussian with standard deviation `scale` or
// Laplacian with scale parameter `scale`.
class NoiseScale {
 public:
  static NoiseScale gaussian(double sigma) { return NoiseScale(NoiseKind::gaussian, sigma); }
  static NoiseScale laplacian(double lambda) { return NoiseScale(NoiseKind::laplacian, lambda); }

  NoiseKind kind() const noexcept { return kind_; }
  double scale() const noexcept { return scale_; }

  friend bool operator==(const NoiseScale&, const NoiseScale&) = default;

 private:
  NoiseScale(NoiseKind kind, double scale);

  NoiseKind kind_;
  double scale_;
};

struct PixelDpParams {
  PixelDpParams(double epsilon, double delta);

  double epsilon;
  double delta;
};

/// Power mean M_p = ((1/n) sum x_i^p)^(1/p). p = 0 gives the geometric mean;
/// for p <= 0 a zero entry makes the mean zero. Throws InvalidArgument on an
/// empty or negative input.
double generalized_mean(double p, std::span<const double> values);

/// Lower bound on D_alpha(Q || P) over all Q whose argmax differs from P's:
/// -log(1 - p1 - p2 + 2 M_{1-alpha}(p1, p2)). Zero iff p1 == p2.
double lemma1_lower_bound(const TopTwo& top, RenyiOrder order);

struct AlphaSupremum {
  double alpha;   // maximizing order
  double radius;  // certified l2 radius at that order
};

/// sup over alpha > 1 of sqrt(2 sigma^2 / alpha * lemma1_lower_bound), found by
/// a 200-point log grid on [1 + 1e-9, 500] followed by golden-section
/// refinement around the best grid point. Throws InfiniteRadius when p1 == 1.
AlphaSupremum maximize_l2_radius(const TopTwo& top, const NoiseScale& sigma);

/// Certified l2 radius under Gaussian noise. `sigma` must be Gaussian.
double l2_radius(const TopTwo& top, const NoiseScale& sigma);

/// Certified l1 radius under Laplacian noise: -lambda log(1 - p1 + p2).
/// Throws InfiniteRadius when p1 - p2 == 1.
double l1_radius(const TopTwo& top, const NoiseScale& lambda);

/// Dispatches to l2_radius or l1_radius on the noise kind.
double certified_radius(const TopTwo& top, const NoiseScale& noise);

/// D_alpha(N(x1, sigma^2 I) || N(x2, sigma^2 I)) = alpha ||x1 - x2||^2 / (2 sigma^2).
double gaussian_renyi_divergence(double distance_sq, double sigma, RenyiOrder order);

/// D_alpha between two product Laplacians with scale lambda whose means are an
/// l1 distance `distance_l1` apart. Tends to distance_l1 / lambda as alpha grows.
double laplace_renyi_divergence(double distance_l1, double lambda, RenyiOrder order);

// PixelDP search grid: epsilon in {0.01, ..., 1.00}, delta on 100 log-spaced
// points in [1e-10, 0.5].
inline constexpr std::size_t kPixelDpEpsilonSteps = 100;
inline constexpr double kPixelDpEpsilonStep = 0.01;
inline constexpr std::size_t kPixelDpDeltaSteps = 100;
inline constexpr double kPixelDpDeltaMin = 1e-10;
inline constexpr double kPixelDpDeltaMax = 0.5;

/// p1 >= e^{2 eps} p2 + (1 + e^{eps}) delta.
bool pixeldp_condition(const TopTwo& top, const PixelDpParams& params);

/// sigma * eps / sqrt(2 log(1.25 / delta)).
double pixeldp_radius_for(const PixelDpParams& params, double sigma);

/// Best PixelDP radius over the (epsilon, delta) grid among points that satisfy
/// pixeldp_condition; zero when none does.
double pixeldp_radius(const TopTwo& top, double sigma);

}  // namespace smoothcert::bounds
