#pragma once

// Brute-force references for the closed forms in bounds: exhaustive search
// over a simplex grid, a dense alpha grid, and numerical Renyi integrals.
// Slow by construction; used by tests and the acceptance suite.

#include <cstddef>
#include <span>
#include <vector>

#include "smoothcert/bounds.hpp"

namespace smoothcert::oracle {

inline constexpr std::size_t kMaxSimplexClasses = 4;
// Stand-in for a zero entry of P inside (q/p)^alpha.
inline constexpr double kZeroProbabilityClamp = 1e-15;

struct DivergenceMinimum {
  double divergence;
  std::vector<double> minimizer;
};

/// min over Q on the grid {i * grid_step} of the simplex of
/// D_alpha(Q || P) = 1/(alpha - 1) log sum_i p_i (q_i / p_i)^alpha, subject to
/// some class other than argmax P having q_j >= q_{argmax P} (a tie counts as
/// a flip). Requires k <= 4, grid_step <= 0.05 and 1 / grid_step integral;
/// steps above 0.01 are only useful for convergence studies.
DivergenceMinimum lemma1_brute_force(std::span<const double> p, bounds::RenyiOrder order, double grid_step);

/// max over a log-spaced grid of `points` orders in [1 + 1e-9, 500] of
/// sqrt(2 sigma^2 / alpha * lemma1_lower_bound).
double alpha_sup_brute_force(const bounds::TopTwo& top, double sigma, std::size_t points = 1'000'000);

/// (1/(alpha - 1)) log of the integral of q^{1 - alpha} p^alpha over the real
/// line for p = N(mean_shift, sigma^2) and q = N(0, sigma^2), by adaptive
/// Gauss-Kronrod quadrature. Throws NumericalError if the error estimate
/// stays above tolerance.
double renyi_integral_1d(double mean_shift, double sigma, bounds::RenyiOrder order);

}  // namespace smoothcert::oracle
