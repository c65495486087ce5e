#include "smoothcert/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "smoothcert/csv.hpp"
#include "smoothcert/errors.hpp"
#include "smoothcert/noise.hpp"
#include "smoothcert/parallel.hpp"

namespace smoothcert::attacks {
namespace {

constexpr std::uint64_t kRestartStream = 0x52455354ULL;

void check_config(const AttackConfig& cfg) {
  if (!(cfg.epsilon >= 0.0) || !std::isfinite(cfg.epsilon)) throw InvalidArgument("epsilon must be >= 0");
  if (cfg.step_size < 0.0) throw InvalidArgument("step_size must be >= 0");
  if (cfg.eot_samples == 0) throw InvalidArgument("eot_samples must be at least 1");
}

nn::Vector attack_gradient(const nn::Network& net, std::span<const double> x, std::size_t label,
                           const AttackConfig& cfg, std::uint64_t stream) {
  if (cfg.noise) return eot_gradient(net, x, label, *cfg.noise, cfg.eot_samples, cfg.seed, stream);
  return nn::input_gradient(net, x, label);
}

// Loss used to rank restarts: plain cross-entropy, or its EOT average.
double attack_loss(const nn::Network& net, std::span<const double> x, std::size_t label,
                   const AttackConfig& cfg, std::uint64_t stream) {
  if (!cfg.noise) return nn::cross_entropy(net, x, label);
  double total = 0.0;
  std::vector<double> noisy(x.size());
  for (std::size_t i = 0; i < cfg.eot_samples; ++i) {
    std::copy(x.begin(), x.end(), noisy.begin());
    auto rng = noise::substream(cfg.seed, stream, i);
    noise::add_noise(*cfg.noise, rng, noisy);
    total += nn::cross_entropy(net, noisy, label);
  }
  return total / static_cast<double>(cfg.eot_samples);
}

std::vector<double> random_start(std::span<const double> x, const AttackConfig& cfg,
                                 std::uint64_t example_index, std::size_t restart) {
  auto rng = noise::substream(cfg.seed ^ kRestartStream, example_index, restart);
  std::vector<double> start(x.begin(), x.end());
  if (cfg.norm == Norm::linf) {
    std::uniform_real_distribution<double> u(-cfg.epsilon, cfg.epsilon);
    for (double& v : start) v += u(rng);
  } else {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> dir(x.size());
    double norm = 0.0;
    for (double& v : dir) {
      v = g(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    const double radius =
        cfg.epsilon * std::pow(std::uniform_real_distribution<double>(0.0, 1.0)(rng), 1.0 / static_cast<double>(x.size()));
    if (norm > 0.0) {
      for (std::size_t i = 0; i < x.size(); ++i) start[i] += radius * dir[i] / norm;
    }
  }
  project(start, x, cfg.norm, cfg.epsilon, cfg.box);
  return start;
}

}  // namespace

double AttackConfig::effective_step() const {
  if (step_size > 0.0) return step_size;
  return iterations == 0 ? 0.0 : 2.5 * epsilon / static_cast<double>(iterations);
}

nn::Vector eot_gradient(const nn::Network& net, std::span<const double> x, std::size_t label,
                        const bounds::NoiseScale& noise, std::size_t n0, std::uint64_t seed,
                        std::uint64_t stream) {
  if (n0 == 0) throw InvalidArgument("EOT needs at least one sample");
  nn::Vector sum = nn::Vector::Zero(static_cast<Eigen::Index>(x.size()));
  std::vector<double> noisy(x.size());
  for (std::size_t i = 0; i < n0; ++i) {
    std::copy(x.begin(), x.end(), noisy.begin());
    auto rng = noise::substream(seed, stream, i);
    noise::add_noise(noise, rng, noisy);
    sum += nn::input_gradient(net, noisy, label);
  }
  return sum / static_cast<double>(n0);
}

double perturbation_norm(Norm norm, std::span<const double> delta) {
  double acc = 0.0;
  for (double v : delta) {
    if (norm == Norm::linf) {
      acc = std::max(acc, std::abs(v));
    } else {
      acc += v * v;
    }
  }
  return norm == Norm::linf ? acc : std::sqrt(acc);
}

void project(std::span<double> candidate, std::span<const double> origin, Norm norm, double epsilon,
             const std::optional<data::FeatureBox>& box) {
  if (candidate.size() != origin.size()) throw InvalidArgument("projection size mismatch");
  if (norm == Norm::linf) {
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      candidate[i] = std::clamp(candidate[i], origin[i] - epsilon, origin[i] + epsilon);
    }
  } else {
    double sq = 0.0;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      const double d = candidate[i] - origin[i];
      sq += d * d;
    }
    const double length = std::sqrt(sq);
    if (length > epsilon) {
      const double shrink = epsilon / length;
      for (std::size_t i = 0; i < candidate.size(); ++i) {
        candidate[i] = origin[i] + (candidate[i] - origin[i]) * shrink;
      }
    }
  }
  if (box) {
    for (double& v : candidate) v = std::clamp(v, box->lo, box->hi);
  }
}

std::vector<double> pgd_attack(const nn::Network& net, std::span<const double> x, std::size_t label,
                               const AttackConfig& cfg, std::uint64_t example_index) {
  check_config(cfg);
  std::vector<double> origin(x.begin(), x.end());
  if (cfg.iterations == 0 || cfg.epsilon == 0.0) return origin;
  const double step = cfg.effective_step();

  std::vector<double> best;
  double best_loss = -std::numeric_limits<double>::infinity();
  for (std::size_t restart = 0; restart <= cfg.random_restarts; ++restart) {
    std::vector<double> current = restart == 0 ? origin : random_start(x, cfg, example_index, restart);
    for (std::size_t t = 0; t < cfg.iterations; ++t) {
      const std::uint64_t stream = noise::substream_seed(example_index, restart, t);
      const nn::Vector g = attack_gradient(net, current, label, cfg, stream);
      if (cfg.norm == Norm::linf) {
        for (std::size_t i = 0; i < current.size(); ++i) {
          const double gi = g[static_cast<Eigen::Index>(i)];
          current[i] += step * static_cast<double>((gi > 0.0) - (gi < 0.0));
        }
      } else {
        const double length = g.norm();
        if (length == 0.0) continue;
        for (std::size_t i = 0; i < current.size(); ++i) {
          current[i] += step * g[static_cast<Eigen::Index>(i)] / length;
        }
      }
      project(current, x, cfg.norm, cfg.epsilon, cfg.box);
    }
    if (cfg.random_restarts == 0) return current;
    const double loss =
        attack_loss(net, current, label, cfg, noise::substream_seed(example_index, restart, cfg.iterations));
    if (loss > best_loss) {
      best_loss = loss;
      best = std::move(current);
    }
  }
  return best;
}

RobustAccuracy empirical_robust_accuracy(const nn::Network& net, const data::Dataset& dataset,
                                         const AttackConfig& attack,
                                         const std::optional<smoothing::SmoothingConfig>& smoothing) {
  if (dataset.size() == 0) throw InvalidArgument("robust accuracy needs a nonempty dataset");
  AttackConfig cfg = attack;
  if (smoothing) {
    if (!cfg.noise) cfg.noise = smoothing->noise;
    if (!(*cfg.noise == smoothing->noise)) {
      throw InvalidArgument("attacker noise must equal the defender's noise");
    }
  }
  check_config(cfg);
  const nn::NetworkClassifier classifier(net);

  std::vector<AttackRecord> records(dataset.size());
  parallel_for(dataset.size(), [&](std::size_t i) {
    const auto x = dataset.features(i);
    const auto adversarial = pgd_attack(net, x, dataset.label(i), cfg, i);
    const std::size_t predicted = smoothing ? smoothing::predict(classifier, adversarial, *smoothing, i)
                                            : classifier.classify(adversarial);
    std::vector<double> delta(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) delta[j] = adversarial[j] - x[j];
    records[i] = {cfg.epsilon, i, predicted != dataset.label(i), perturbation_norm(cfg.norm, delta)};
  });
  const auto held = std::count_if(records.begin(), records.end(), [](const AttackRecord& r) { return !r.success; });
  return {static_cast<double>(held) / static_cast<double>(records.size()), std::move(records)};
}

void write_attack_records_csv(std::ostream& out, std::span<const AttackRecord> records) {
  out << csv::kVersionLine << '\n';
  out << "epsilon,example_id,success_flag,achieved_norm\n";
  for (const auto& r : records) {
    out << csv::format_double(r.epsilon) << ',' << r.example_id << ',' << (r.success ? 1 : 0) << ','
        << csv::format_double(r.achieved_norm) << '\n';
  }
}

}  // namespace smoothcert::attacks
