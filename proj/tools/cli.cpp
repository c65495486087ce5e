#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "smoothcert/attacks.hpp"
#include "smoothcert/bounds.hpp"
#include "smoothcert/csv.hpp"
#include "smoothcert/errors.hpp"
#include "smoothcert/smoothing.hpp"

namespace smoothcert::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  return out;
}

void finish_output(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw FormatError("failed writing " + path.string());
}

std::size_t count_field(const json& config, const std::string& key) {
  const json& v = config.at(key);
  if (!v.is_number_unsigned()) throw InvalidArgument("config field '" + key + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

double real_field(const json& config, const std::string& key) {
  const json& v = config.at(key);
  if (!v.is_number()) throw InvalidArgument("config field '" + key + "' must be a number");
  return v.get<double>();
}

std::string string_field(const json& config, const std::string& key) {
  const json& v = config.at(key);
  if (!v.is_string()) throw InvalidArgument("config field '" + key + "' must be a string");
  return v.get<std::string>();
}

nn::TrainMode parse_mode(const std::string& name) {
  if (name == "plain") return nn::TrainMode::plain;
  if (name == "gaussian_augment") return nn::TrainMode::gaussian_augment;
  if (name == "stability") return nn::TrainMode::stability;
  throw InvalidArgument("config field 'mode' must be plain, gaussian_augment or stability");
}

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

std::string scale_tag(const bounds::NoiseScale& noise) {
  return (noise.kind() == bounds::NoiseKind::gaussian ? "sigma" : "lambda") + csv::format_double(noise.scale());
}

void add_dataset_flags(CLI::App& cmd, DatasetSpec& spec) {
  cmd.add_option("--dataset", spec.kind, "Example source")->check(CLI::IsMember({"blobs", "idx"}));
  cmd.add_option("--images", spec.images, "IDX image file (idx)");
  cmd.add_option("--labels", spec.labels, "IDX label file (idx)");
  cmd.add_option("--n-per-class", spec.blobs.n_per_class, "Examples per blob class");
  cmd.add_option("--classes", spec.blobs.class_count, "Blob class count");
  cmd.add_option("--dim", spec.blobs.dim, "Blob dimension");
  cmd.add_option("--separation", spec.blobs.separation, "Distance between blob centers");
  cmd.add_option("--cluster-std", spec.blobs.cluster_std, "Blob standard deviation");
  cmd.add_option("--data-seed", spec.blobs.seed, "Blob generator seed");
  cmd.add_option("--offset", spec.offset, "Skip this many examples");
  cmd.add_option("--limit", spec.limit, "Keep at most this many examples (0 = all)");
}

std::vector<bounds::NoiseScale> noise_list(const std::vector<double>& sigmas, const std::vector<double>& lambdas) {
  std::vector<bounds::NoiseScale> out;
  for (double s : sigmas) out.push_back(bounds::NoiseScale::gaussian(s));
  for (double l : lambdas) out.push_back(bounds::NoiseScale::laplacian(l));
  return out;
}

struct TrainArgs {
  fs::path config;
  fs::path checkpoint;
  fs::path out;
};

void cmd_train(const TrainArgs& args, std::ostream& log) {
  std::ifstream in(args.config);
  if (!in) throw InvalidArgument("cannot read config file " + args.config.string());
  json config;
  try {
    config = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("config is not valid JSON: " + std::string(e.what()));
  }
  TrainJob job = parse_train_config(config, args.config.parent_path());
  if (!args.checkpoint.empty()) job.checkpoint = args.checkpoint;
  if (!args.out.empty()) job.metrics = args.out / "train_metrics.csv";
  if (job.checkpoint.empty()) throw InvalidArgument("no checkpoint path: set 'checkpoint' or pass --checkpoint");
  if (job.metrics.empty()) job.metrics = fs::path(job.checkpoint).replace_extension(".metrics.csv");

  const data::Dataset dataset = load_dataset(job.dataset);
  std::vector<std::size_t> widths{dataset.dim()};
  widths.insert(widths.end(), job.hidden.begin(), job.hidden.end());
  widths.push_back(dataset.class_count());
  const auto result = nn::train(nn::Network::initialize(widths, job.train.seed), dataset, job.train);

  if (job.checkpoint.has_parent_path()) fs::create_directories(job.checkpoint.parent_path());
  nn::save_checkpoint(result.network, job.checkpoint);
  auto metrics = open_output(job.metrics);
  metrics << csv::kVersionLine << '\n' << "epoch,loss,train_accuracy\n";
  for (const auto& e : result.trace) {
    metrics << e.epoch << ',' << csv::format_double(e.loss) << ',' << csv::format_double(e.train_accuracy) << '\n';
  }
  finish_output(metrics, job.metrics);
  log << "wrote " << job.checkpoint.string() << " and " << job.metrics.string() << '\n';
}

struct CertifyArgs {
  fs::path checkpoint;
  DatasetSpec dataset;
  std::vector<double> sigmas;
  std::vector<double> lambdas;
  std::size_t n = 100;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  std::vector<double> radii;
  fs::path out = ".";
};

void cmd_certify(const CertifyArgs& args, std::ostream& log) {
  auto noises = noise_list(args.sigmas, args.lambdas);
  if (noises.empty()) throw InvalidArgument("certify needs at least one --sigma or --lambda");
  const nn::NetworkClassifier classifier(nn::load_checkpoint(args.checkpoint));
  const data::Dataset dataset = load_dataset(args.dataset);
  const std::vector<double> radii = args.radii.empty() ? default_radii() : args.radii;

  for (const auto& noise : noises) {
    smoothing::SmoothingConfig cfg;
    cfg.noise = noise;
    cfg.n_samples = args.n;
    cfg.confidence = args.confidence;
    cfg.seed = args.seed;
    const auto results = smoothing::certify_dataset(classifier, dataset, cfg);
    const auto curve = smoothing::certified_accuracy_curve(results, dataset.labels(), radii, cfg.confidence);

    const fs::path records_path = args.out / ("certify_" + scale_tag(noise) + ".csv");
    auto records = open_output(records_path);
    smoothing::write_certification_csv(records, results, dataset.labels());
    finish_output(records, records_path);

    const fs::path curve_path = args.out / ("curve_" + scale_tag(noise) + ".csv");
    auto curve_out = open_output(curve_path);
    smoothing::write_curve_csv(curve_out, curve);
    finish_output(curve_out, curve_path);
    log << "wrote " << records_path.string() << " and " << curve_path.string() << '\n';
  }
}

struct AttackArgs {
  fs::path checkpoint;
  DatasetSpec dataset;
  std::string norm = "l2";
  std::vector<double> epsilons;
  std::size_t steps = attacks::kDefaultIterations;
  double step_size = 0.0;
  std::size_t eot = 1;
  std::size_t restarts = 0;
  double sigma = 0.0;
  double lambda = 0.0;
  std::size_t n = 100;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  fs::path out = ".";
};

void cmd_attack(const AttackArgs& args, std::ostream& log) {
  if (args.epsilons.empty()) throw InvalidArgument("attack needs at least one --epsilon");
  if (args.sigma > 0.0 && args.lambda > 0.0) throw InvalidArgument("--sigma and --lambda are exclusive");
  const nn::Network net = nn::load_checkpoint(args.checkpoint);
  const data::Dataset dataset = load_dataset(args.dataset);

  std::optional<smoothing::SmoothingConfig> smoothing;
  if (args.sigma > 0.0 || args.lambda > 0.0) {
    smoothing::SmoothingConfig cfg;
    cfg.noise = args.sigma > 0.0 ? bounds::NoiseScale::gaussian(args.sigma) : bounds::NoiseScale::laplacian(args.lambda);
    cfg.n_samples = args.n;
    cfg.confidence = args.confidence;
    cfg.seed = args.seed;
    smoothing = cfg;
  }

  attacks::AttackConfig attack;
  attack.norm = args.norm == "linf" ? attacks::Norm::linf : attacks::Norm::l2;
  attack.iterations = args.steps;
  attack.step_size = args.step_size;
  attack.eot_samples = args.eot;
  attack.seed = args.seed;
  attack.random_restarts = args.restarts;
  attack.box = dataset.domain();

  const std::string tag = smoothing ? scale_tag(smoothing->noise) : "sigma0";
  const fs::path summary_path = args.out / ("attack_" + args.norm + "_" + tag + ".csv");
  const fs::path records_path = args.out / ("attack_" + args.norm + "_" + tag + "_records.csv");
  std::vector<attacks::AttackRecord> all_records;
  std::ostringstream summary;
  summary << csv::kVersionLine << '\n' << "epsilon,robust_accuracy\n";
  for (double eps : args.epsilons) {
    attack.epsilon = eps;
    auto result = attacks::empirical_robust_accuracy(net, dataset, attack, smoothing);
    summary << csv::format_double(eps) << ',' << csv::format_double(result.accuracy) << '\n';
    all_records.insert(all_records.end(), result.records.begin(), result.records.end());
  }
  auto summary_out = open_output(summary_path);
  summary_out << summary.str();
  finish_output(summary_out, summary_path);
  auto records_out = open_output(records_path);
  attacks::write_attack_records_csv(records_out, all_records);
  finish_output(records_out, records_path);
  log << "wrote " << summary_path.string() << " and " << records_path.string() << '\n';
}

struct CompareArgs {
  double sigma = 1.0;
  double step = 0.01;
  double min_sum = 0.2;
  fs::path out = ".";
};

void cmd_compare_bounds(const CompareArgs& args, std::ostream& log) {
  if (!(args.sigma > 0.0)) throw InvalidArgument("--sigma must be positive");
  if (!(args.step > 0.0 && args.step <= 0.5)) throw InvalidArgument("--step must lie in (0, 0.5]");
  const double steps_real = 1.0 / args.step;
  const auto steps = static_cast<long>(std::lround(steps_real));
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-6) throw InvalidArgument("1 / --step must be an integer");
  const auto min_steps = static_cast<long>(std::ceil(args.min_sum * static_cast<double>(steps) - 1e-9));

  const fs::path path = args.out / "compare_bounds.csv";
  auto out = open_output(path);
  out << csv::kVersionLine << '\n' << "p1,p2,ours,pixeldp,ratio\n";
  const auto noise = bounds::NoiseScale::gaussian(args.sigma);
  std::size_t rows = 0;
  for (long i2 = 0; 2 * i2 <= steps; ++i2) {
    for (long i1 = i2; i1 + i2 <= steps; ++i1) {
      if (i1 + i2 < min_steps) continue;
      const double p1 = static_cast<double>(i1) / static_cast<double>(steps);
      const double p2 = static_cast<double>(i2) / static_cast<double>(steps);
      const bounds::TopTwo top(p1, p2);
      double ours;
      try {
        ours = bounds::l2_radius(top, noise);
      } catch (const InfiniteRadius&) {
        ours = std::numeric_limits<double>::infinity();
      }
      const double pixeldp = bounds::pixeldp_radius(top, args.sigma);
      double ratio;
      if (pixeldp > 0.0) {
        ratio = ours / pixeldp;
      } else {
        ratio = ours > 0.0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
      }
      out << csv::format_double(p1) << ',' << csv::format_double(p2) << ',' << csv::format_double(ours) << ','
          << csv::format_double(pixeldp) << ',' << csv::format_double(ratio) << '\n';
      ++rows;
    }
  }
  finish_output(out, path);
  log << "wrote " << path.string() << " (" << rows << " rows)\n";
}

}  // namespace

data::Dataset load_dataset(const DatasetSpec& spec) {
  data::Dataset full = [&] {
    if (spec.kind == "blobs") return data::make_blobs(spec.blobs);
    if (spec.kind == "idx") {
      if (spec.images.empty() || spec.labels.empty()) throw InvalidArgument("idx dataset needs --images and --labels");
      return data::load_idx(spec.images, spec.labels);
    }
    throw InvalidArgument("unknown dataset '" + spec.kind + "'");
  }();
  if (spec.offset == 0 && spec.limit == 0) return full;
  if (spec.offset > full.size()) throw InvalidArgument("offset past end of dataset");
  const std::size_t rest = full.size() - spec.offset;
  return full.slice(spec.offset, spec.limit == 0 ? rest : std::min(spec.limit, rest));
}

TrainJob parse_train_config(const json& config, const fs::path& base) {
  if (!config.is_object()) throw InvalidArgument("config must be a JSON object");
  TrainJob job;
  for (const auto& [key, value] : config.items()) {
    if (key == "epochs") {
      job.train.epochs = count_field(config, key);
    } else if (key == "batch_size") {
      job.train.batch_size = count_field(config, key);
    } else if (key == "learning_rate") {
      job.train.learning_rate = real_field(config, key);
    } else if (key == "stability_gamma") {
      job.train.stability_gamma = real_field(config, key);
    } else if (key == "noise_sigma") {
      job.train.noise_sigma = real_field(config, key);
    } else if (key == "mode") {
      job.train.mode = parse_mode(string_field(config, key));
    } else if (key == "seed") {
      job.train.seed = count_field(config, key);
    } else if (key == "hidden") {
      if (!value.is_array()) throw InvalidArgument("config field 'hidden' must be an array of widths");
      job.hidden.clear();
      for (const auto& w : value) {
        if (!w.is_number_unsigned() || w.get<std::size_t>() == 0) {
          throw InvalidArgument("config field 'hidden' must hold positive integers");
        }
        job.hidden.push_back(w.get<std::size_t>());
      }
    } else if (key == "dataset") {
      job.dataset.kind = string_field(config, key);
      if (job.dataset.kind != "blobs" && job.dataset.kind != "idx") {
        throw InvalidArgument("config field 'dataset' must be blobs or idx");
      }
    } else if (key == "n_per_class") {
      job.dataset.blobs.n_per_class = count_field(config, key);
    } else if (key == "class_count") {
      job.dataset.blobs.class_count = count_field(config, key);
    } else if (key == "dim") {
      job.dataset.blobs.dim = count_field(config, key);
    } else if (key == "separation") {
      job.dataset.blobs.separation = real_field(config, key);
    } else if (key == "cluster_std") {
      job.dataset.blobs.cluster_std = real_field(config, key);
    } else if (key == "data_seed") {
      job.dataset.blobs.seed = count_field(config, key);
    } else if (key == "images") {
      job.dataset.images = resolve(base, string_field(config, key));
    } else if (key == "labels") {
      job.dataset.labels = resolve(base, string_field(config, key));
    } else if (key == "offset") {
      job.dataset.offset = count_field(config, key);
    } else if (key == "limit") {
      job.dataset.limit = count_field(config, key);
    } else if (key == "checkpoint") {
      job.checkpoint = resolve(base, string_field(config, key));
    } else if (key == "metrics") {
      job.metrics = resolve(base, string_field(config, key));
    } else {
      throw InvalidArgument("unknown config field '" + key + "'");
    }
  }
  return job;
}

std::vector<double> default_radii() {
  std::vector<double> radii;
  for (int i = 0; i <= 40; ++i) radii.push_back(i / 20.0);
  return radii;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certified robustness by randomized smoothing"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train an MLP from a JSON config");
  train->add_option("--config", train_args.config, "Flat JSON train config")->required();
  train->add_option("--checkpoint", train_args.checkpoint, "Checkpoint output (overrides config)");
  train->add_option("--out", train_args.out, "Directory for train_metrics.csv (overrides config)");

  CertifyArgs certify_args;
  auto* certify = app.add_subcommand("certify", "Certify every example and emit accuracy curves");
  certify->add_option("--checkpoint", certify_args.checkpoint, "Trained network")->required();
  add_dataset_flags(*certify, certify_args.dataset);
  certify->add_option("--sigma", certify_args.sigmas, "Gaussian noise level (repeatable)");
  certify->add_option("--lambda", certify_args.lambdas, "Laplacian noise scale (repeatable)");
  certify->add_option("--n", certify_args.n, "Noise samples per example");
  certify->add_option("--confidence", certify_args.confidence, "Overall confidence level");
  certify->add_option("--seed", certify_args.seed, "Noise seed");
  certify->add_option("--radius", certify_args.radii, "Curve radius (repeatable)");
  certify->add_option("--out", certify_args.out, "Output directory");

  AttackArgs attack_args;
  auto* attack = app.add_subcommand("attack", "PGD robust accuracy over an epsilon sweep");
  attack->add_option("--checkpoint", attack_args.checkpoint, "Trained network")->required();
  add_dataset_flags(*attack, attack_args.dataset);
  attack->add_option("--norm", attack_args.norm, "Attack norm")->check(CLI::IsMember({"l2", "linf"}));
  attack->add_option("--epsilon", attack_args.epsilons, "Attack radius (repeatable)");
  attack->add_option("--steps", attack_args.steps, "PGD iterations");
  attack->add_option("--step-size", attack_args.step_size, "PGD step (0 = 2.5 eps / steps)");
  attack->add_option("--eot", attack_args.eot, "Noise samples per gradient");
  attack->add_option("--restarts", attack_args.restarts, "Random restarts");
  attack->add_option("--sigma", attack_args.sigma, "Gaussian noise level (0 = unsmoothed)");
  attack->add_option("--lambda", attack_args.lambda, "Laplacian noise scale");
  attack->add_option("--n", attack_args.n, "Noise samples for the smoothed prediction");
  attack->add_option("--confidence", attack_args.confidence, "Confidence level");
  attack->add_option("--seed", attack_args.seed, "Noise seed");
  attack->add_option("--out", attack_args.out, "Output directory");

  CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare-bounds", "Our l2 radius against the PixelDP radius");
  compare->add_option("--sigma", compare_args.sigma, "Gaussian noise level");
  compare->add_option("--step", compare_args.step, "Grid step for p1 and p2");
  compare->add_option("--min-sum", compare_args.min_sum, "Smallest p1 + p2 kept");
  compare->add_option("--out", compare_args.out, "Output directory");

  std::vector<std::string> argv_storage{"smoothcert"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) cmd_train(train_args, out);
    if (*certify) cmd_certify(certify_args, out);
    if (*attack) cmd_attack(attack_args, out);
    if (*compare) cmd_compare_bounds(compare_args, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalError;
  }
  return kOk;
}

}  // namespace smoothcert::cli
