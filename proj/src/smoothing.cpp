#include "smoothcert/smoothing.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

#include "smoothcert/csv.hpp"
#include "smoothcert/errors.hpp"
#include "smoothcert/noise.hpp"
#include "smoothcert/parallel.hpp"

namespace smoothcert::smoothing {
namespace {

void check_config(const SmoothingConfig& cfg) {
  if (cfg.n_samples == 0) throw InvalidArgument("n_samples must be at least 1");
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) {
    throw InvalidArgument("confidence must lie in (0, 1)");
  }
}

}  // namespace

stats::ClassCounts sample_counts(const BaseClassifier& f, std::span<const double> x,
                                 const SmoothingConfig& cfg, std::uint64_t example_index) {
  check_config(cfg);
  const std::size_t k = f.num_classes();
  if (k == 0) throw InvalidArgument("classifier reports zero classes");
  std::vector<std::uint64_t> counts(k, 0);
  std::vector<double> noisy(x.size());
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    std::copy(x.begin(), x.end(), noisy.begin());
    auto rng = noise::substream(cfg.seed, example_index, i);
    noise::add_noise(cfg.noise, rng, noisy);
    if (cfg.clip_to_unit_box) {
      for (double& v : noisy) v = std::clamp(v, 0.0, 1.0);
    }
    std::size_t label;
    try {
      label = f.classify(noisy);
    } catch (const std::exception& e) {
      throw ClassifierError(i, e.what());
    }
    if (label >= k) throw ClassifierError(i, "label " + std::to_string(label) + " out of range");
    ++counts[label];
  }
  return stats::ClassCounts(std::move(counts));
}

double radius_from_intervals(const stats::IntervalPair& intervals, const SmoothingConfig& cfg,
                             const stats::ClassCounts& counts) {
  double p1 = intervals.p1_lower;
  double p2 = intervals.p2_upper;
  if (!cfg.use_interval_endpoints) {
    const auto n = static_cast<double>(counts.total());
    const auto runner = counts.runner_up_class();
    p1 = static_cast<double>(counts[counts.top_class()]) / n;
    p2 = runner ? static_cast<double>(counts[*runner]) / n : 0.0;
  }
  if (p1 <= p2) return 0.0;
  try {
    return bounds::certified_radius(bounds::TopTwo(p1, p2), cfg.noise);
  } catch (const InfiniteRadius&) {
    return std::numeric_limits<double>::infinity();
  }
}

CertificationResult certify(const BaseClassifier& f, std::span<const double> x,
                            const SmoothingConfig& cfg, std::uint64_t example_index) {
  auto counts = sample_counts(f, x, cfg, example_index);
  const auto intervals = stats::clopper_pearson_pair(counts, cfg.confidence);
  const double radius = radius_from_intervals(intervals, cfg, counts);
  const std::size_t predicted = counts.top_class();
  return {predicted, radius, radius > 0.0, std::move(counts), intervals, cfg.noise.kind()};
}

std::size_t predict(const BaseClassifier& f, std::span<const double> x, const SmoothingConfig& cfg,
                    std::uint64_t example_index) {
  return sample_counts(f, x, cfg, example_index).top_class();
}

std::vector<CurvePoint> certified_accuracy_curve(std::span<const CertificationResult> results,
                                                 std::span<const std::size_t> labels,
                                                 std::span<const double> radii, double confidence,
                                                 bool multiply_by_confidence) {
  if (results.empty() || radii.empty()) throw InvalidArgument("curve needs examples and radii");
  if (results.size() != labels.size()) throw InvalidArgument("one label per result required");
  const double scale = multiply_by_confidence ? confidence : 1.0;
  std::vector<CurvePoint> curve;
  curve.reserve(radii.size());
  for (double threshold : radii) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (results[i].predicted_class == labels[i] && results[i].radius > threshold) ++hits;
    }
    curve.push_back({threshold, scale * static_cast<double>(hits) / static_cast<double>(results.size())});
  }
  return curve;
}

std::vector<CertificationResult> certify_dataset(const BaseClassifier& f, const data::Dataset& dataset,
                                                 const SmoothingConfig& cfg) {
  check_config(cfg);
  std::vector<std::optional<CertificationResult>> slots(dataset.size());
  parallel_for(dataset.size(), [&](std::size_t i) { slots[i] = certify(f, dataset.features(i), cfg, i); });
  std::vector<CertificationResult> results;
  results.reserve(slots.size());
  for (auto& s : slots) results.push_back(std::move(*s));
  return results;
}

std::vector<CurvePoint> certified_accuracy_curve(const BaseClassifier& f, const data::Dataset& dataset,
                                                 const SmoothingConfig& cfg, std::span<const double> radii,
                                                 bool multiply_by_confidence) {
  if (dataset.size() == 0) throw InvalidArgument("curve needs a nonempty dataset");
  const auto results = certify_dataset(f, dataset, cfg);
  return certified_accuracy_curve(results, dataset.labels(), radii, cfg.confidence,
                                  multiply_by_confidence);
}

void write_certification_csv(std::ostream& out, std::span<const CertificationResult> results,
                             std::span<const std::size_t> labels) {
  out << csv::kVersionLine << '\n';
  out << "example_id,true_label,predicted,p1_lower,p2_upper,radius,certified\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    out << i << ',' << labels[i] << ',' << r.predicted_class << ','
        << csv::format_double(r.intervals.p1_lower) << ',' << csv::format_double(r.intervals.p2_upper)
        << ',' << csv::format_double(r.radius) << ',' << (r.certified ? 1 : 0) << '\n';
  }
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve) {
  out << csv::kVersionLine << '\n';
  out << "L_star,certified_accuracy\n";
  for (const auto& p : curve) {
    out << csv::format_double(p.radius) << ',' << csv::format_double(p.certified_accuracy) << '\n';
  }
}

}  // namespace smoothcert::smoothing
