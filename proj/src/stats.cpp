#include "smoothcert/stats.hpp"

#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <numeric>
#include <stdexcept>

#include "smoothcert/errors.hpp"

namespace smoothcert::stats {
namespace {

using BetaPolicy = boost::math::policies::policy<
    boost::math::policies::evaluation_error<boost::math::policies::throw_on_error>,
    boost::math::policies::domain_error<boost::math::policies::throw_on_error>,
    boost::math::policies::max_root_iterations<500>>;

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
}

}  // namespace

ClassCounts::ClassCounts(std::vector<std::uint64_t> counts) : counts_(std::move(counts)) {
  total_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
  if (total_ == 0) throw InvalidArgument("class counts must total at least one draw");
}

std::size_t ClassCounts::top_class() const noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts_.size(); ++i) {
    if (counts_[i] > counts_[best]) best = i;
  }
  return best;
}

std::optional<std::size_t> ClassCounts::runner_up_class() const noexcept {
  const std::size_t top = top_class();
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (i == top) continue;
    if (!best || counts_[i] > counts_[*best]) best = i;
  }
  return best;
}

double beta_quantile(double q, double a, double b) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("beta quantile level must lie in (0, 1)");
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("beta shape parameters must be positive");
  try {
    return boost::math::ibeta_inv(a, b, q, BetaPolicy());
  } catch (const std::exception& e) {
    throw NumericalError(std::string("beta quantile: ") + e.what());
  }
}

double clopper_pearson_lower(std::uint64_t successes, std::uint64_t trials, double level) {
  check_level(level);
  if (trials == 0 || successes > trials) throw InvalidArgument("need 0 <= successes <= trials, trials >= 1");
  if (successes == 0) return 0.0;
  return beta_quantile(1.0 - level, static_cast<double>(successes),
                       static_cast<double>(trials - successes + 1));
}

double clopper_pearson_upper(std::uint64_t successes, std::uint64_t trials, double level) {
  check_level(level);
  if (trials == 0 || successes > trials) throw InvalidArgument("need 0 <= successes <= trials, trials >= 1");
  if (successes == trials) return 1.0;
  return beta_quantile(level, static_cast<double>(successes + 1),
                       static_cast<double>(trials - successes));
}

double bonferroni_level(double overall_confidence) {
  check_level(overall_confidence);
  return 1.0 - (1.0 - overall_confidence) / 2.0;
}

IntervalPair clopper_pearson_pair(const ClassCounts& counts, double overall_confidence) {
  const double level = bonferroni_level(overall_confidence);
  const std::uint64_t n = counts.total();
  const std::uint64_t top = counts[counts.top_class()];
  const auto runner = counts.runner_up_class();
  const std::uint64_t second = runner ? counts[*runner] : 0;
  return {clopper_pearson_lower(top, n, level), clopper_pearson_upper(second, n, level),
          overall_confidence};
}

}  // namespace smoothcert::stats
