#include "smoothcert/oracle.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "smoothcert/errors.hpp"

namespace smoothcert::oracle {
namespace {

constexpr double kAlphaMin = 1.0 + 1e-9;
constexpr double kAlphaMax = 500.0;
constexpr double kQuadratureRelTolerance = 1e-10;
constexpr double kTailSigmas = 40.0;
constexpr double kMaxGridStep = 0.05;

// Visits every vector of k nonnegative integers summing to total.
template <class Fn>
void for_each_composition(std::size_t k, std::size_t total, std::vector<std::size_t>& parts,
                          std::size_t index, std::size_t remaining, Fn&& fn) {
  if (index + 1 == k) {
    parts[index] = remaining;
    fn(parts);
    return;
  }
  for (std::size_t c = 0; c <= remaining; ++c) {
    parts[index] = c;
    for_each_composition(k, total, parts, index + 1, remaining - c, fn);
  }
}

double log_normal_pdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return -0.5 * z * z - std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

DivergenceMinimum lemma1_brute_force(std::span<const double> p, bounds::RenyiOrder order, double grid_step) {
  const std::size_t k = p.size();
  if (k < 2 || k > kMaxSimplexClasses) throw InvalidArgument("brute force supports 2 to 4 classes");
  if (!(grid_step > 0.0 && grid_step <= kMaxGridStep)) throw InvalidArgument("grid_step must lie in (0, 0.05]");
  const double steps_real = 1.0 / grid_step;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-6) {
    throw InvalidArgument("1 / grid_step must be an integer");
  }
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw InvalidArgument("P must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("P must sum to one");

  const std::size_t top = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  const double alpha = order.value();
  std::vector<double> weight(k);
  for (std::size_t i = 0; i < k; ++i) {
    weight[i] = std::pow(std::max(p[i], kZeroProbabilityClamp), 1.0 - alpha);
  }

  double best_s = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_parts;
  std::vector<std::size_t> parts(k);
  for_each_composition(k, steps, parts, 0, steps, [&](const std::vector<std::size_t>& q) {
    bool flipped = false;
    for (std::size_t j = 0; j < k; ++j) flipped = flipped || (j != top && q[j] >= q[top]);
    if (!flipped) return;
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (q[i] != 0) s += weight[i] * std::pow(static_cast<double>(q[i]) / static_cast<double>(steps), alpha);
    }
    if (s < best_s) {
      best_s = s;
      best_parts = q;
    }
  });

  DivergenceMinimum result{std::log(best_s) / (alpha - 1.0), {}};
  for (std::size_t c : best_parts) result.minimizer.push_back(static_cast<double>(c) / static_cast<double>(steps));
  return result;
}

double alpha_sup_brute_force(const bounds::TopTwo& top, double sigma, std::size_t points) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (points < 2) throw InvalidArgument("need at least two grid points");
  if (top.first() == top.second()) return 0.0;
  const double log_lo = std::log(kAlphaMin);
  const double log_hi = std::log(kAlphaMax);
  double best = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    const double alpha = i == 0 ? kAlphaMin : (i + 1 == points ? kAlphaMax : std::exp(log_lo + t * (log_hi - log_lo)));
    best = std::max(best, bounds::lemma1_lower_bound(top, bounds::RenyiOrder(alpha)) / alpha);
  }
  return sigma * std::sqrt(2.0 * best);
}

double renyi_integral_1d(double mean_shift, double sigma, bounds::RenyiOrder order) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (!std::isfinite(mean_shift)) throw InvalidArgument("mean shift must be finite");
  const double alpha = order.value();
  const auto log_integrand = [&](double x) {
    return (1.0 - alpha) * log_normal_pdf(x, 0.0, sigma) + alpha * log_normal_pdf(x, mean_shift, sigma);
  };

  // Locate the peak of the log-concave integrand.
  const double reach = (alpha + 1.0) * (std::abs(mean_shift) + sigma) + 10.0 * sigma;
  double lo = -reach;
  double hi = reach;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - inv_phi * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = log_integrand(a);
  double fb = log_integrand(b);
  while (hi - lo > 1e-12 * std::max(1.0, reach)) {
    if (fa >= fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = log_integrand(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = log_integrand(b);
    }
  }
  const double peak = 0.5 * (lo + hi);
  const double log_peak = log_integrand(peak);

  // Integrate in units of sigma around the peak.
  double error = 0.0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double t) { return std::exp(log_integrand(peak + sigma * t) - log_peak); },
      -kTailSigmas, kTailSigmas, 15, 1e-12,
      &error);
  if (!(integral > 0.0) || !std::isfinite(integral) || error > kQuadratureRelTolerance * integral) {
    throw NumericalError("Renyi quadrature did not converge");
  }
  return (log_peak + std::log(sigma * integral)) / (alpha - 1.0);
}

}  // namespace smoothcert::oracle
