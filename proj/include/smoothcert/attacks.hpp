#pragma once

// White-box PGD adversaries against a network, optionally averaging input
// gradients over the smoothing noise (expectation over randomization).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "smoothcert/bounds.hpp"
#include "smoothcert/data.hpp"
#include "smoothcert/nn.hpp"
#include "smoothcert/smoothing.hpp"

namespace smoothcert::attacks {

enum class Norm { l2, linf };

inline constexpr std::size_t kDefaultIterations = 40;

struct AttackConfig {
  Norm norm = Norm::l2;
  double epsilon = 0.0;
  // Zero selects 2.5 * epsilon / iterations.
  double step_size = 0.0;
  std::size_t iterations = kDefaultIterations;
  std::size_t eot_samples = 1;
  // Defender's noise; empty attacks the bare network with exact gradients.
  std::optional<bounds::NoiseScale> noise;
  std::uint64_t seed = 0;
  // Extra runs from uniform random points in the ball; the run with the
  // highest final loss wins.
  std::size_t random_restarts = 0;
  // Box every iterate is projected into; empty for unbounded features.
  std::optional<data::FeatureBox> box = data::FeatureBox{0.0, 1.0};

  double effective_step() const;
};

/// (1/n0) sum_i grad_x L(x + r_i, label) with r_i drawn from `noise` on
/// substreams (seed, stream, i).
nn::Vector eot_gradient(const nn::Network& net, std::span<const double> x, std::size_t label,
                        const bounds::NoiseScale& noise, std::size_t n0, std::uint64_t seed,
                        std::uint64_t stream = 0);

/// Norm of a perturbation in the attack's norm.
double perturbation_norm(Norm norm, std::span<const double> delta);

/// Projects `candidate` onto the epsilon-ball around `origin`, then into the
/// box. Clamping into a box that contains `origin` never increases the
/// distance to it, so both constraints hold afterwards.
void project(std::span<double> candidate, std::span<const double> origin, Norm norm, double epsilon,
             const std::optional<data::FeatureBox>& box);

/// Iterated sign-gradient (linf) or normalized-gradient (l2) ascent on the
/// cross-entropy, projected after every step. Returns the final iterate.
std::vector<double> pgd_attack(const nn::Network& net, std::span<const double> x, std::size_t label,
                               const AttackConfig& cfg, std::uint64_t example_index = 0);

struct AttackRecord {
  double epsilon;
  std::size_t example_id;
  bool success;  // final prediction differs from the true label
  double achieved_norm;
};

struct RobustAccuracy {
  double accuracy;
  std::vector<AttackRecord> records;
};

/// Attacks every example and classifies the result with the smoothed
/// classifier (or the bare network when `smoothing` is empty). The attack's
/// noise must equal the defender's.
RobustAccuracy empirical_robust_accuracy(const nn::Network& net, const data::Dataset& dataset,
                                         const AttackConfig& attack,
                                         const std::optional<smoothing::SmoothingConfig>& smoothing);

/// CSV rows: epsilon,example_id,success_flag,achieved_norm
void write_attack_records_csv(std::ostream& out, std::span<const AttackRecord> records);

}  // namespace smoothcert::attacks
