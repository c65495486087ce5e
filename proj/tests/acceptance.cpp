// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any
// criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "smoothcert/attacks.hpp"
#include "smoothcert/bounds.hpp"
#include "smoothcert/errors.hpp"
#include "smoothcert/nn.hpp"
#include "smoothcert/oracle.hpp"
#include "smoothcert/smoothing.hpp"
#include "smoothcert/stats.hpp"

using namespace smoothcert;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kRadiusRelTol = 1e-6;
constexpr double kLemmaGapLow = -1e-4;
constexpr double kLemmaGapHigh = 1e-2;
constexpr double kRenyiAbsTol = 1e-6;
constexpr double kRatioTarget = 2.0;
constexpr double kNominalCoverage = 0.975;
constexpr double kCoverageSigmas = 3.0;
constexpr double kGradientRelTol = 1e-4;
constexpr double kStderrSlack = 2.0;
constexpr double kMnistFloor = 0.35;

// Time budgets in seconds.
constexpr double kBudget1 = 60;
constexpr double kBudget2 = 300;
constexpr double kBudget3 = 10;
constexpr double kBudget4 = 120;
constexpr double kBudget5 = 60;
constexpr double kBudget6 = 10;
constexpr double kBudget7 = 300;
constexpr double kBudget8 = 600;
constexpr double kBudget9 = 3600;
constexpr double kBudget10 = 30;

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double budget, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = o.pass && secs <= budget;
  if (!pass) ++failures;
  std::printf("criterion %2d %s  %-28s %s  [%.1f s / %.0f s]\n", id, pass ? "PASS" : "FAIL", name, o.detail.c_str(),
              secs, budget);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome radius_vs_oracle() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const double p1 = 0.02 + 0.97 * u(rng);
    const double p2 = std::min(p1, 1.0 - p1) * u(rng) * 0.999;
    const double sigma = 0.05 + 2.0 * u(rng);
    const bounds::TopTwo top(p1, p2);
    const double grid = oracle::alpha_sup_brute_force(top, sigma);
    const double opt = bounds::l2_radius(top, bounds::NoiseScale::gaussian(sigma));
    worst = std::max(worst, std::abs(grid - opt) / opt);
  }
  return {worst <= kRadiusRelTol, fmt("max rel diff %.2e", worst)};
}

Outcome lemma_vs_oracle() {
  std::mt19937_64 rng(202);
  std::gamma_distribution<double> g(1.0, 1.0);
  double lo = INFINITY;
  double hi = -INFINITY;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p{g(rng), g(rng), g(rng)};
    const double s = p[0] + p[1] + p[2];
    for (double& v : p) v /= s;
    std::vector<double> sorted(p);
    std::sort(sorted.rbegin(), sorted.rend());
    for (double alpha : {1.5, 2.0, 4.0}) {
      const bounds::RenyiOrder order(alpha);
      const double gap = oracle::lemma1_brute_force(p, order, 0.005).divergence -
                         bounds::lemma1_lower_bound(bounds::TopTwo(sorted[0], sorted[1]), order);
      lo = std::min(lo, gap);
      hi = std::max(hi, gap);
    }
  }
  return {lo >= kLemmaGapLow && hi <= kLemmaGapHigh, fmt("gap in [%.2e, %.2e]", lo, hi)};
}

Outcome renyi_closed_form() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double d = 3.0 * u(rng);
    const double sigma = 0.2 + 2.8 * u(rng);
    const bounds::RenyiOrder order(1.05 + 9.0 * u(rng));
    const double numeric = oracle::renyi_integral_1d(d, sigma, order);
    worst = std::max(worst, std::abs(numeric - bounds::gaussian_renyi_divergence(d * d, sigma, order)));
  }
  return {worst <= kRenyiAbsTol, fmt("max abs diff %.2e", worst)};
}

Outcome pixeldp_dominance() {
  constexpr long steps = 100;
  std::size_t cells = 0;
  std::size_t violations = 0;
  double best_ratio = 0.0;
  double best_p1 = 0.0;
  double best_p2 = 0.0;
  for (double sigma : {0.25, 0.5, 1.0}) {
    const auto noise = bounds::NoiseScale::gaussian(sigma);
    for (long i2 = 0; 2 * i2 <= steps; ++i2) {
      for (long i1 = i2; i1 + i2 <= steps; ++i1) {
        if (i1 + i2 < 20) continue;
        const double p1 = static_cast<double>(i1) / steps;
        const double p2 = static_cast<double>(i2) / steps;
        const bounds::TopTwo top(p1, p2);
        double ours;
        try {
          ours = bounds::l2_radius(top, noise);
        } catch (const InfiniteRadius&) {
          ours = INFINITY;
        }
        const double theirs = bounds::pixeldp_radius(top, sigma);
        ++cells;
        if (i1 > i2 ? !(ours > theirs) : !(ours >= theirs)) ++violations;
        if (theirs > 0.0 && std::isfinite(ours) && ours / theirs > best_ratio) {
          best_ratio = ours / theirs;
          best_p1 = p1;
          best_p2 = p2;
        }
      }
    }
  }
  std::ostringstream s;
  s << violations << "/" << cells << " violations, max ratio " << fmt("%.2f at (%.2f, %.2f)", best_ratio, best_p1, best_p2);
  return {violations == 0 && best_ratio > kRatioTarget && best_p1 >= 4.0 * best_p2, s.str()};
}

Outcome clopper_pearson_coverage() {
  constexpr int draws = 20000;
  constexpr std::uint64_t n = 100;
  std::mt19937_64 rng(505);
  const double se = std::sqrt(kNominalCoverage * (1.0 - kNominalCoverage) / draws);
  double worst = 1.0;
  for (double p : {0.5, 0.9, 0.99}) {
    std::binomial_distribution<std::uint64_t> draw(n, p);
    int lower_ok = 0;
    int upper_ok = 0;
    for (int t = 0; t < draws; ++t) {
      const std::uint64_t k = draw(rng);
      lower_ok += stats::clopper_pearson_lower(k, n, kNominalCoverage) <= p;
      upper_ok += stats::clopper_pearson_upper(k, n, kNominalCoverage) >= p;
    }
    worst = std::min({worst, static_cast<double>(lower_ok) / draws, static_cast<double>(upper_ok) / draws});
  }
  return {worst >= kNominalCoverage - kCoverageSigmas * se, fmt("min coverage %.4f (floor %.4f)", worst,
                                                                 kNominalCoverage - kCoverageSigmas * se)};
}

double gradient_error(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> width(2, 8);
  std::vector<std::size_t> widths{width(rng)};
  const std::size_t hidden = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
  for (std::size_t i = 0; i < hidden; ++i) widths.push_back(width(rng));
  widths.push_back(width(rng));
  nn::Network net = nn::Network::initialize(widths, seed);
  std::normal_distribution<double> g(0.0, 0.5);
  for (auto& layer : net.layers()) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = g(rng);
  }
  std::vector<double> x(widths.front());
  for (double& v : x) v = g(rng);
  const std::size_t label = std::uniform_int_distribution<std::size_t>(0, widths.back() - 1)(rng);

  const nn::Gradient grad = nn::gradient(net, x, label);
  constexpr double h = 1e-5;
  double diff = 0.0;
  double scale = 0.0;
  const auto compare = [&](double analytic, double up, double down) {
    const double numeric = (up - down) / (2 * h);
    diff = std::max(diff, std::abs(analytic - numeric));
    scale = std::max({scale, std::abs(analytic), std::abs(numeric)});
  };
  const auto bump = [&](double& slot, double analytic) {
    const double saved = slot;
    slot = saved + h;
    const double up = nn::cross_entropy(net, x, label);
    slot = saved - h;
    const double down = nn::cross_entropy(net, x, label);
    slot = saved;
    compare(analytic, up, down);
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.layers()[l];
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) bump(layer.weights.data()[i], grad.weights[l].data()[i]);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) bump(layer.bias[i], grad.biases[l][i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) bump(x[i], grad.input[static_cast<Eigen::Index>(i)]);
  return scale == 0.0 ? 0.0 : diff / scale;
}

Outcome gradient_check() {
  double worst = 0.0;
  for (std::uint64_t seed = 1000; seed < 1100; ++seed) worst = std::max(worst, gradient_error(seed));
  return {worst < kGradientRelTol, fmt("max rel error %.2e", worst)};
}

double certified_at(const nn::Network& net, const data::Dataset& test, const smoothing::SmoothingConfig& cfg,
                    double radius) {
  const nn::NetworkClassifier f(net);
  const std::vector<double> radii{radius};
  return smoothing::certified_accuracy_curve(f, test, cfg, radii).front().certified_accuracy;
}

Outcome stability_effect() {
  constexpr double kRadius = 0.25;
  std::ostringstream s;
  bool all = true;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    data::BlobSpec spec;
    spec.n_per_class = 20;
    spec.class_count = 3;
    spec.dim = 50;
    spec.seed = seed;
    const auto train_set = data::make_blobs(spec);
    spec.n_per_class = 100;
    spec.seed = 1000 + seed;
    const auto test_set = data::make_blobs(spec);
    const std::array<std::size_t, 4> widths{50, 64, 64, 3};
    nn::TrainConfig cfg;
    cfg.epochs = 100;
    cfg.batch_size = 16;
    cfg.seed = seed;
    const auto plain = nn::train(nn::Network::initialize(widths, seed), train_set, cfg);
    cfg.mode = nn::TrainMode::stability;
    cfg.noise_sigma = 0.5;
    cfg.stability_gamma = 1.0;
    const auto stab = nn::train(nn::Network::initialize(widths, seed), train_set, cfg);

    smoothing::SmoothingConfig smooth;
    smooth.noise = bounds::NoiseScale::gaussian(0.5);
    smooth.seed = seed;
    const double a = certified_at(plain.network, test_set, smooth, kRadius);
    const double b = certified_at(stab.network, test_set, smooth, kRadius);
    all = all && b > a;
    s << fmt("seed %.0f plain %.3f stab %.3f; ", static_cast<double>(seed), a, b);
  }
  return {all, s.str()};
}

Outcome certified_below_empirical() {
  data::BlobSpec spec;
  spec.n_per_class = 150;
  spec.separation = 4.0;
  spec.seed = 11;
  const auto train_set = data::make_blobs(spec);
  spec.n_per_class = 100;
  spec.seed = 12;
  const auto test_set = data::make_blobs(spec);
  const std::array<std::size_t, 4> widths{2, 32, 32, 2};
  nn::TrainConfig cfg;
  cfg.epochs = 40;
  cfg.mode = nn::TrainMode::stability;
  cfg.noise_sigma = 0.5;
  cfg.stability_gamma = 1.0;
  cfg.seed = 11;
  const auto net = nn::train(nn::Network::initialize(widths, 11), train_set, cfg).network;

  smoothing::SmoothingConfig smooth;
  smooth.noise = bounds::NoiseScale::gaussian(0.5);
  smooth.seed = 13;
  const nn::NetworkClassifier f(net);
  const std::vector<double> radii{0.0, 0.15, 0.3, 0.45, 0.6};
  const auto curve = smoothing::certified_accuracy_curve(f, test_set, smooth, radii);

  attacks::AttackConfig attack;
  attack.norm = attacks::Norm::l2;
  attack.iterations = 20;
  attack.eot_samples = 8;
  attack.random_restarts = 1;
  attack.seed = 14;
  attack.box.reset();
  std::ostringstream s;
  bool ok = true;
  const double m = static_cast<double>(test_set.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    attack.epsilon = radii[i];
    const double empirical = attacks::empirical_robust_accuracy(net, test_set, attack, smooth).accuracy;
    const double cert = curve[i].certified_accuracy;
    const double stderr_ = std::sqrt(std::max(cert * (1.0 - cert), 1.0 / m) / m);
    ok = ok && empirical >= cert - kStderrSlack * stderr_;
    s << fmt("L=%.2f cert %.2f emp %.2f; ", radii[i], cert, empirical);
  }
  return {ok, s.str()};
}

Outcome mnist_floor() {
  const fs::path dir = SMOOTHCERT_TEST_DATA;
  const auto train_set =
      data::load_idx(dir / "mnist5k-train-images-idx3-ubyte", dir / "mnist5k-train-labels-idx1-ubyte");
  const auto test_set = data::load_idx(dir / "mnist5k-test-images-idx3-ubyte", dir / "mnist5k-test-labels-idx1-ubyte");
  const std::array<std::size_t, 4> widths{784, 256, 128, 10};
  nn::TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.05;
  cfg.mode = nn::TrainMode::stability;
  cfg.stability_gamma = 4.0;
  cfg.noise_sigma = 1.0;
  cfg.seed = 1;
  const auto net = nn::train(nn::Network::initialize(widths, 1), train_set, cfg).network;

  smoothing::SmoothingConfig smooth;
  smooth.noise = bounds::NoiseScale::gaussian(0.7);
  smooth.seed = 0;
  const double acc = certified_at(net, test_set, smooth, 1.0);
  return {acc >= kMnistFloor, fmt("certified accuracy %.3f at L*=1.0 (floor %.2f), clean %.3f", acc, kMnistFloor,
                                  nn::accuracy(net, test_set))};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "smoothcert_acceptance";
  fs::remove_all(root);
  std::vector<fs::path> dirs{root / "a", root / "b"};
  for (const auto& dir : dirs) {
    fs::create_directories(dir);
    std::ofstream(dir / "train.json")
        << R"({"epochs": 10, "mode": "stability", "noise_sigma": 0.5, "stability_gamma": 1.0, "seed": 5,
               "hidden": [16], "n_per_class": 40, "data_seed": 3, "checkpoint": "net.ckpt"})";
    const std::string d = dir.string();
    const std::string ckpt = (dir / "net.ckpt").string();
    const std::vector<std::vector<std::string>> commands{
        {"train", "--config", (dir / "train.json").string()},
        {"certify", "--checkpoint", ckpt, "--n-per-class", "15", "--data-seed", "8", "--sigma", "0.25", "--sigma",
         "0.5", "--lambda", "0.5", "--seed", "6", "--out", d},
        {"attack", "--checkpoint", ckpt, "--n-per-class", "15", "--data-seed", "8", "--norm", "l2", "--epsilon", "0.5",
         "--epsilon", "1", "--sigma", "0.5", "--eot", "4", "--n", "50", "--restarts", "1", "--seed", "6", "--out", d},
        {"attack", "--checkpoint", ckpt, "--n-per-class", "15", "--data-seed", "8", "--norm", "linf", "--epsilon",
         "0.3", "--seed", "6", "--out", d},
        {"compare-bounds", "--sigma", "0.5", "--step", "0.02", "--out", d},
    };
    for (const auto& c : commands) {
      std::ostringstream out;
      std::ostringstream err;
      if (cli::run(c, out, err) != cli::kOk) return {false, c.front() + " failed: " + err.str()};
    }
  }
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const auto name = entry.path().filename();
    if (name.extension() != ".csv") continue;
    ++compared;
    if (slurp(dirs[0] / name) != slurp(dirs[1] / name)) differing.push_back(name.string());
  }
  std::ostringstream s;
  s << compared << " csv files compared, " << differing.size() << " differ";
  for (const auto& n : differing) s << " " << n;
  fs::remove_all(root);
  return {differing.empty() && compared >= 9, s.str()};
}

}  // namespace

int main() {
  report(1, "l2 radius vs alpha grid", kBudget1, radius_vs_oracle);
  report(2, "lemma bound vs simplex grid", kBudget2, lemma_vs_oracle);
  report(3, "renyi closed form vs quadrature", kBudget3, renyi_closed_form);
  report(4, "pixeldp dominance", kBudget4, pixeldp_dominance);
  report(5, "clopper-pearson coverage", kBudget5, clopper_pearson_coverage);
  report(6, "gradient check", kBudget6, gradient_check);
  report(7, "stability training effect", kBudget7, stability_effect);
  report(8, "certified <= empirical", kBudget8, certified_below_empirical);
  report(9, "mnist certified floor", kBudget9, mnist_floor);
  report(10, "cli determinism", kBudget10, cli_determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
