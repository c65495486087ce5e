#pragma once

// Randomized smoothing of a point classifier: Monte Carlo label counts under
// additive noise, interval adjustment, and certified radii.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "smoothcert/bounds.hpp"
#include "smoothcert/data.hpp"
#include "smoothcert/stats.hpp"

namespace smoothcert::smoothing {

// Deterministic map from an input vector to a label in [0, num_classes()).
// Implementations must tolerate concurrent calls to classify().
class BaseClassifier {
 public:
  virtual ~BaseClassifier() = default;
  virtual std::size_t num_classes() const = 0;
  virtual std::size_t classify(std::span<const double> x) const = 0;
};

struct SmoothingConfig {
  bounds::NoiseScale noise = bounds::NoiseScale::gaussian(0.5);
  std::size_t n_samples = 100;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  // Clip each noisy input to [0, 1] before classification.
  bool clip_to_unit_box = false;
  // Use Clopper-Pearson endpoints for (p1, p2). When false the raw empirical
  // frequencies are used; only meant for checking the bound in isolation.
  bool use_interval_endpoints = true;
};

struct CertificationResult {
  std::size_t predicted_class;
  // l2 radius for Gaussian noise, l1 for Laplacian. +inf only in raw-frequency
  // mode with a unanimous vote.
  double radius;
  bool certified;
  stats::ClassCounts counts;
  stats::IntervalPair intervals;
  bounds::NoiseKind norm;
};

/// Tallies f(x + noise) over cfg.n_samples draws. Sample i of example
/// `example_index` draws from its own substream of cfg.seed.
stats::ClassCounts sample_counts(const BaseClassifier& f, std::span<const double> x,
                                 const SmoothingConfig& cfg, std::uint64_t example_index = 0);

/// Counts, then the bound on (p1_lower, p2_upper). Uncertifiable inputs get
/// certified = false and radius 0 with the argmax prediction.
CertificationResult certify(const BaseClassifier& f, std::span<const double> x,
                            const SmoothingConfig& cfg, std::uint64_t example_index = 0);

/// Recomputes the radius a result should carry from its counts and intervals.
double radius_from_intervals(const stats::IntervalPair& intervals, const SmoothingConfig& cfg,
                             const stats::ClassCounts& counts);

/// Argmax of sample_counts.
std::size_t predict(const BaseClassifier& f, std::span<const double> x, const SmoothingConfig& cfg,
                    std::uint64_t example_index = 0);

struct CurvePoint {
  double radius;
  double certified_accuracy;
};

/// Fraction of results that are correct with radius > L*, scaled by
/// `confidence` when multiply_by_confidence is set.
std::vector<CurvePoint> certified_accuracy_curve(std::span<const CertificationResult> results,
                                                 std::span<const std::size_t> labels,
                                                 std::span<const double> radii, double confidence,
                                                 bool multiply_by_confidence = true);

/// Certifies every example (in parallel) and builds the curve.
std::vector<CurvePoint> certified_accuracy_curve(const BaseClassifier& f, const data::Dataset& dataset,
                                                 const SmoothingConfig& cfg, std::span<const double> radii,
                                                 bool multiply_by_confidence = true);

/// certify() over every example, ordered by example index.
std::vector<CertificationResult> certify_dataset(const BaseClassifier& f, const data::Dataset& dataset,
                                                 const SmoothingConfig& cfg);

/// CSV rows: example_id,true_label,predicted,p1_lower,p2_upper,radius,certified
void write_certification_csv(std::ostream& out, std::span<const CertificationResult> results,
                             std::span<const std::size_t> labels);

/// CSV rows: L_star,certified_accuracy
void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve);

}  // namespace smoothcert::smoothing
