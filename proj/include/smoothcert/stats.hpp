#pragma once

// One-sided Clopper-Pearson endpoints for the top two class frequencies of a
// stochastic classifier, with an even Bonferroni split across the two.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace smoothcert::stats {

// Label tallies from n draws of a stochastic classifier.
class ClassCounts {
 public:
  // Requires sum(counts) >= 1.
  explicit ClassCounts(std::vector<std::uint64_t> counts);

  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t total() const noexcept { return total_; }
  std::size_t class_count() const noexcept { return counts_.size(); }
  std::uint64_t operator[](std::size_t label) const { return counts_.at(label); }

  // Most frequent label; ties go to the lowest index.
  std::size_t top_class() const noexcept;
  // Most frequent label other than top_class(); empty for a single class.
  std::optional<std::size_t> runner_up_class() const noexcept;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

struct IntervalPair {
  double p1_lower;
  double p2_upper;
  double overall_confidence;
};

/// x such that I_x(a, b) = q (regularized incomplete beta). Throws NumericalError
/// if the inversion does not converge.
double beta_quantile(double q, double a, double b);

/// Lower endpoint of a one-sided Clopper-Pearson interval at `level` for
/// `successes` out of `trials`; zero when successes == 0.
double clopper_pearson_lower(std::uint64_t successes, std::uint64_t trials, double level);

/// Upper endpoint; one when successes == trials.
double clopper_pearson_upper(std::uint64_t successes, std::uint64_t trials, double level);

/// Per-statement level after splitting 1 - overall_confidence evenly across two.
double bonferroni_level(double overall_confidence);

/// p1_lower for the top-count class and p2_upper for the runner-up, each at
/// bonferroni_level(overall_confidence).
IntervalPair clopper_pearson_pair(const ClassCounts& counts, double overall_confidence = 0.95);

}  // namespace smoothcert::stats
