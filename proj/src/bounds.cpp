#include "smoothcert/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "smoothcert/errors.hpp"

namespace smoothcert::bounds {
namespace {

constexpr double kAlphaMin = 1.0 + 1e-9;
constexpr double kAlphaMax = 500.0;
constexpr std::size_t kAlphaGridPoints = 200;
constexpr double kGoldenTolerance = 1e-10;

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

// B(alpha) / alpha; the squared radius is 2 sigma^2 times this.
double alpha_objective(const TopTwo& top, double alpha) {
  return lemma1_lower_bound(top, RenyiOrder(alpha)) / alpha;
}

}  // namespace

TopTwo::TopTwo(double first, double second) : first_(first), second_(second) {
  if (!is_probability(first) || !is_probability(second)) {
    throw InvalidArgument("top-two probabilities must lie in [0, 1]");
  }
  if (first < second) {
    throw InvalidArgument("p1 < p2: top-two probabilities out of order");
  }
  if (first + second > 1.0 + kProbabilitySumSlack) {
    throw InvalidArgument("p1 + p2 > 1");
  }
}

RenyiOrder::RenyiOrder(double alpha) : alpha_(alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("Renyi order must be a finite value > 1");
  }
}

NoiseScale::NoiseScale(NoiseKind kind, double scale) : kind_(kind), scale_(scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidArgument("noise scale must be positive and finite");
  }
}

PixelDpParams::PixelDpParams(double eps, double dlt) : epsilon(eps), delta(dlt) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("PixelDP epsilon must be > 0");
  if (!(dlt > 0.0 && dlt <= 0.5)) throw InvalidArgument("PixelDP delta must lie in (0, 0.5]");
}

double generalized_mean(double p, std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("generalized mean of an empty list");
  bool has_zero = false;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("generalized mean requires finite nonnegative values");
    }
    has_zero = has_zero || v == 0.0;
  }
  const double n = static_cast<double>(values.size());

  if (p == 0.0) {
    if (has_zero) return 0.0;
    double sum_log = 0.0;
    for (double v : values) sum_log += std::log(v);
    return std::exp(sum_log / n);
  }
  if (p < 0.0 && has_zero) return 0.0;

  // Work with t_i = p log x_i so that large |p| cannot overflow x_i^p.
  double max_t = -std::numeric_limits<double>::infinity();
  double max_abs_t = 0.0;
  for (double v : values) {
    const double t = p * std::log(v);
    max_t = std::max(max_t, t);
    if (std::isfinite(t)) max_abs_t = std::max(max_abs_t, std::abs(t));
  }
  if (max_t == -std::numeric_limits<double>::infinity()) return 0.0;  // all zero, p > 0

  double log_mean_power;
  if (max_abs_t < 0.5) {
    // Near p = 0 the log-sum-exp form cancels catastrophically; expm1/log1p does not.
    double mean_expm1 = 0.0;
    for (double v : values) mean_expm1 += std::expm1(p * std::log(v));
    log_mean_power = std::log1p(mean_expm1 / n);
  } else {
    double acc = 0.0;
    for (double v : values) acc += std::exp(p * std::log(v) - max_t);
    log_mean_power = max_t + std::log(acc) - std::log(n);
  }
  return std::exp(log_mean_power / p);
}

double lemma1_lower_bound(const TopTwo& top, RenyiOrder order) {
  const double p1 = top.first();
  const double p2 = top.second();
  if (p1 == p2) return 0.0;

  // M_{1-alpha}(p1, 0) = 0 for alpha > 1.
  double mean = 0.0;
  if (p2 > 0.0) {
    const std::array<double, 2> pair{p1, p2};
    mean = generalized_mean(1.0 - order.value(), pair);
  }
  const double gap = 2.0 * mean - p1 - p2;  // in (-(p1 + p2), 0]
  if (gap <= -1.0) throw InfiniteRadius();
  return std::max(0.0, -std::log1p(gap));
}

AlphaSupremum maximize_l2_radius(const TopTwo& top, const NoiseScale& sigma) {
  if (sigma.kind() != NoiseKind::gaussian) {
    throw InvalidArgument("l2 radius requires Gaussian noise");
  }
  if (top.first() == 1.0) throw InfiniteRadius();
  if (top.first() == top.second()) return {kAlphaMin, 0.0};

  const double log_lo = std::log(kAlphaMin);
  const double log_hi = std::log(kAlphaMax);
  std::array<double, kAlphaGridPoints> grid{};
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t i = 0; i < kAlphaGridPoints; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(kAlphaGridPoints - 1);
    grid[i] = i + 1 == kAlphaGridPoints ? kAlphaMax : std::exp(log_lo + t * (log_hi - log_lo));
    if (i == 0) grid[i] = kAlphaMin;
    const double value = alpha_objective(top, grid[i]);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }

  double lo = grid[best == 0 ? 0 : best - 1];
  double hi = grid[best + 1 == kAlphaGridPoints ? best : best + 1];
  double best_alpha = grid[best];

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - inv_phi * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = alpha_objective(top, a);
  double fb = alpha_objective(top, b);
  while (hi - lo > kGoldenTolerance) {
    if (fa >= fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = alpha_objective(top, a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = alpha_objective(top, b);
    }
  }
  for (auto [alpha, value] : {std::pair{a, fa}, std::pair{b, fb}}) {
    if (value > best_value) {
      best_value = value;
      best_alpha = alpha;
    }
  }
  return {best_alpha, sigma.scale() * std::sqrt(2.0 * best_value)};
}

double l2_radius(const TopTwo& top, const NoiseScale& sigma) {
  return maximize_l2_radius(top, sigma).radius;
}

double l1_radius(const TopTwo& top, const NoiseScale& lambda) {
  if (lambda.kind() != NoiseKind::laplacian) {
    throw InvalidArgument("l1 radius requires Laplacian noise");
  }
  const double gap = top.second() - top.first();
  if (gap == 0.0) return 0.0;
  if (gap <= -1.0) throw InfiniteRadius();
  return -lambda.scale() * std::log1p(gap);
}

double certified_radius(const TopTwo& top, const NoiseScale& noise) {
  return noise.kind() == NoiseKind::gaussian ? l2_radius(top, noise) : l1_radius(top, noise);
}

double gaussian_renyi_divergence(double distance_sq, double sigma, RenyiOrder order) {
  if (!(distance_sq >= 0.0)) throw InvalidArgument("squared distance must be nonnegative");
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  return order.value() * distance_sq / (2.0 * sigma * sigma);
}

double laplace_renyi_divergence(double distance_l1, double lambda, RenyiOrder order) {
  if (!(distance_l1 >= 0.0)) throw InvalidArgument("l1 distance must be nonnegative");
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  const double alpha = order.value();
  const double d = distance_l1 / lambda;
  // log(w1 e^{u} + w2 e^{v}) evaluated as a log-sum-exp.
  const double u = std::log(alpha / (2.0 * alpha - 1.0)) + (alpha - 1.0) * d;
  const double v = std::log((alpha - 1.0) / (2.0 * alpha - 1.0)) - alpha * d;
  const double m = std::max(u, v);
  const double lse = m + std::log(std::exp(u - m) + std::exp(v - m));
  return std::max(0.0, lse / (alpha - 1.0));
}

bool pixeldp_condition(const TopTwo& top, const PixelDpParams& params) {
  return top.first() >= std::exp(2.0 * params.epsilon) * top.second() +
                            (1.0 + std::exp(params.epsilon)) * params.delta;
}

double pixeldp_radius_for(const PixelDpParams& params, double sigma) {
  return sigma * params.epsilon / std::sqrt(2.0 * std::log(1.25 / params.delta));
}

double pixeldp_radius(const TopTwo& top, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  const double log_lo = std::log(kPixelDpDeltaMin);
  const double log_hi = std::log(kPixelDpDeltaMax);
  double best = 0.0;
  for (std::size_t i = 1; i <= kPixelDpEpsilonSteps; ++i) {
    const double epsilon = static_cast<double>(i) * kPixelDpEpsilonStep;
    for (std::size_t j = 0; j < kPixelDpDeltaSteps; ++j) {
      const double delta = std::min(
          kPixelDpDeltaMax,
          std::exp(log_lo + static_cast<double>(j) * (log_hi - log_lo) /
                                static_cast<double>(kPixelDpDeltaSteps - 1)));
      const PixelDpParams params(epsilon, delta);
      if (pixeldp_condition(top, params)) best = std::max(best, pixeldp_radius_for(params, sigma));
    }
  }
  return best;
}

}  // namespace smoothcert::bounds
