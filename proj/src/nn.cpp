#include "smoothcert/nn.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "smoothcert/errors.hpp"
#include "smoothcert/noise.hpp"

namespace smoothcert::nn {
namespace {

constexpr std::array<char, 8> kMagic{'S', 'M', 'C', 'E', 'R', 'T', 'N', 'N'};

// Stream tags so that shuffling and noise draws never share a substream.
constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;
constexpr std::uint64_t kNoiseStream = 0x4e4f495345ULL;

// Row-per-example activations of one forward pass.
struct BatchCache {
  std::vector<Matrix> inputs;       // input to layer l (B x in_l)
  std::vector<Matrix> preactivations;  // B x out_l
  Matrix probabilities;             // B x k
};

Matrix apply_activation(const Matrix& z, Activation a) {
  if (a == Activation::relu) return z.cwiseMax(0.0);
  return z;
}

Matrix row_softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    p.row(r) = (logits.row(r).array() - m).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

BatchCache forward_batch(const Network& net, const Matrix& x) {
  BatchCache cache;
  Matrix a = x;
  for (const auto& layer : net.layers()) {
    Matrix z = a * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    cache.inputs.push_back(std::move(a));
    a = apply_activation(z, layer.activation);
    cache.preactivations.push_back(std::move(z));
  }
  cache.probabilities = row_softmax(a);
  return cache;
}

// Accumulates parameter gradients for d loss / d logits = dlogits into grad;
// returns d loss / d input (B x d).
Matrix backward_batch(const Network& net, const BatchCache& cache, Matrix dz, Gradient& grad) {
  const auto& layers = net.layers();
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (layers[l].activation == Activation::relu) {
      dz = dz.cwiseProduct((cache.preactivations[l].array() > 0.0).cast<double>().matrix());
    }
    grad.weights[l].noalias() += dz.transpose() * cache.inputs[l];
    grad.biases[l].noalias() += dz.colwise().sum().transpose();
    dz = dz * layers[l].weights;
  }
  return dz;
}

Gradient zero_gradient(const Network& net) {
  Gradient g;
  for (const auto& layer : net.layers()) {
    g.weights.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    g.biases.push_back(Vector::Zero(layer.bias.size()));
  }
  return g;
}

Matrix as_row(const Network& net, std::span<const double> x) {
  if (x.size() != net.input_dim()) {
    throw InvalidArgument("input has dimension " + std::to_string(x.size()) + ", network expects " +
                          std::to_string(net.input_dim()));
  }
  Matrix row(1, static_cast<Eigen::Index>(x.size()));
  std::copy(x.begin(), x.end(), row.data());
  return row;
}

Matrix one_hot(std::span<const std::size_t> labels, std::size_t k) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = 1.0;
  return y;
}

// -sum_j target_j log p_j for each row, with log p from the logits for accuracy.
double batch_cross_entropy(const Matrix& target, const Matrix& logits) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double log_z = m + std::log((logits.row(r).array() - m).exp().sum());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      if (target(r, c) != 0.0) total -= target(r, c) * (logits(r, c) - log_z);
    }
  }
  return total;
}

const Matrix& logits_of(const BatchCache& cache) {
  return cache.preactivations.back();
}

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw FormatError("checkpoint truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw InvalidArgument("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weights.rows() == 0 || layer.weights.cols() == 0) {
      throw InvalidArgument("layer " + std::to_string(l) + " has an empty weight matrix");
    }
    if (layer.bias.size() != layer.weights.rows()) {
      throw InvalidArgument("layer " + std::to_string(l) + " bias does not match its output width");
    }
    if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows()) {
      throw InvalidArgument("layer " + std::to_string(l) + " input width does not match previous output");
    }
  }
}

Network Network::initialize(std::span<const std::size_t> widths, std::uint64_t seed) {
  if (widths.size() < 2) throw InvalidArgument("need at least input and output widths");
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(widths[l]);
    const auto out = static_cast<Eigen::Index>(widths[l + 1]);
    if (in == 0 || out == 0) throw InvalidArgument("layer widths must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    Layer layer;
    layer.weights.resize(out, in);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = uniform(rng);
    layer.bias = Vector::Zero(out);
    layer.activation = l + 2 == widths.size() ? Activation::identity : Activation::relu;
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector p = (logits.array() - m).exp().matrix();
  return p / p.sum();
}

ForwardResult forward(const Network& net, std::span<const double> x) {
  const auto cache = forward_batch(net, as_row(net, x));
  return {logits_of(cache).row(0).transpose(), cache.probabilities.row(0).transpose()};
}

double cross_entropy(const Network& net, std::span<const double> x, std::size_t label) {
  if (label >= net.class_count()) throw InvalidArgument("label out of range");
  const auto cache = forward_batch(net, as_row(net, x));
  const std::array<std::size_t, 1> labels{label};
  return batch_cross_entropy(one_hot(labels, net.class_count()), logits_of(cache));
}

double stability_loss(const Network& net, std::span<const double> x, std::span<const double> x_noisy) {
  const Matrix target = forward_batch(net, as_row(net, x)).probabilities;
  const auto noisy = forward_batch(net, as_row(net, x_noisy));
  return batch_cross_entropy(target, logits_of(noisy));
}

Gradient gradient(const Network& net, std::span<const double> x, std::size_t label) {
  if (label >= net.class_count()) throw InvalidArgument("label out of range");
  const auto cache = forward_batch(net, as_row(net, x));
  const std::array<std::size_t, 1> labels{label};
  const Matrix y = one_hot(labels, net.class_count());
  Gradient g = zero_gradient(net);
  g.loss = batch_cross_entropy(y, logits_of(cache));
  g.input = backward_batch(net, cache, cache.probabilities - y, g).row(0).transpose();
  return g;
}

Vector input_gradient(const Network& net, std::span<const double> x, std::size_t label) {
  return gradient(net, x, label).input;
}

TrainResult train(Network net, const data::Dataset& data, const TrainConfig& cfg) {
  if (data.size() == 0) throw InvalidArgument("training set is empty");
  if (data.dim() != net.input_dim()) throw InvalidArgument("dataset dimension does not match network");
  if (data.class_count() > net.class_count()) throw InvalidArgument("dataset has more classes than network outputs");
  if (cfg.batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (!(cfg.stability_gamma >= 0.0) || !(cfg.noise_sigma >= 0.0)) {
    throw InvalidArgument("stability_gamma and noise_sigma must be nonnegative");
  }
  if (cfg.mode != TrainMode::plain && !(cfg.noise_sigma > 0.0)) {
    throw InvalidArgument("noisy training modes require noise_sigma > 0");
  }

  const bool use_noise = cfg.mode != TrainMode::plain;
  const double gamma = cfg.mode == TrainMode::stability ? cfg.stability_gamma : 0.0;
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  const std::size_t k = net.class_count();

  std::vector<std::size_t> order(n);
  TrainResult result{std::move(net), {}};
  Network& model = result.network;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto shuffle_rng = noise::substream(cfg.seed ^ kShuffleStream, epoch, 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      const auto rows = static_cast<Eigen::Index>(b);
      Matrix clean(rows, static_cast<Eigen::Index>(d));
      std::vector<std::size_t> labels(b);
      for (std::size_t i = 0; i < b; ++i) {
        const auto x = data.features(order[start + i]);
        std::copy(x.begin(), x.end(), clean.row(static_cast<Eigen::Index>(i)).data());
        labels[i] = data.label(order[start + i]);
      }
      Matrix noisy;
      if (use_noise) {
        noisy = clean;
        const auto sigma = bounds::NoiseScale::gaussian(cfg.noise_sigma);
        for (std::size_t i = 0; i < b; ++i) {
          auto rng = noise::substream(cfg.seed ^ kNoiseStream, epoch, order[start + i]);
          noise::add_noise(sigma, rng, std::span<double>(noisy.row(static_cast<Eigen::Index>(i)).data(), d));
        }
      }
      const Matrix y = one_hot(labels, k);
      const double inv_b = 1.0 / static_cast<double>(b);
      Gradient grad = zero_gradient(model);

      const BatchCache clean_pass = forward_batch(model, clean);
      for (std::size_t i = 0; i < b; ++i) {
        Eigen::Index arg = 0;
        logits_of(clean_pass).row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
        if (static_cast<std::size_t>(arg) == labels[i]) ++correct;
      }

      double batch_loss = 0.0;
      if (cfg.mode == TrainMode::gaussian_augment) {
        const BatchCache noisy_pass = forward_batch(model, noisy);
        batch_loss = batch_cross_entropy(y, logits_of(noisy_pass));
        backward_batch(model, noisy_pass, (noisy_pass.probabilities - y) * inv_b, grad);
      } else {
        batch_loss = batch_cross_entropy(y, logits_of(clean_pass));
        backward_batch(model, clean_pass, (clean_pass.probabilities - y) * inv_b, grad);
        if (cfg.mode == TrainMode::stability) {
          // Target distribution is the clean softmax, held constant.
          const Matrix& target = clean_pass.probabilities;
          const BatchCache noisy_pass = forward_batch(model, noisy);
          batch_loss += gamma * batch_cross_entropy(target, logits_of(noisy_pass));
          backward_batch(model, noisy_pass, (noisy_pass.probabilities - target) * (gamma * inv_b), grad);
        }
      }
      if (!std::isfinite(batch_loss)) throw TrainingError(epoch, "loss is not finite");
      loss_sum += batch_loss;

      auto& layers = model.layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weights -= cfg.learning_rate * grad.weights[l];
        layers[l].bias -= cfg.learning_rate * grad.biases[l];
      }
    }
    const double mean_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(mean_loss)) throw TrainingError(epoch, "loss is not finite");
    result.trace.push_back({epoch, mean_loss, static_cast<double>(correct) / static_cast<double>(n)});
  }
  return result;
}

double accuracy(const Network& net, const data::Dataset& data) {
  if (data.size() == 0) return 0.0;
  NetworkClassifier classifier(net);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (classifier.classify(data.features(i)) == data.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::size_t NetworkClassifier::classify(std::span<const double> x) const {
  Eigen::Index arg = 0;
  forward(net_, x).logits.maxCoeff(&arg);
  return static_cast<std::size_t>(arg);
}

void write_checkpoint(const Network& net, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& layer : net.layers()) {
    put_u32(out, static_cast<std::uint32_t>(layer.weights.cols()));
    put_u32(out, static_cast<std::uint32_t>(layer.weights.rows()));
    out.put(static_cast<char>(layer.activation));
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) put_f64(out, layer.weights.data()[i]);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) put_f64(out, layer.bias[i]);
  }
  if (!out) throw FormatError("failed writing checkpoint");
}

Network read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("not a smoothcert checkpoint (bad magic)");
  }
  const auto version = static_cast<std::uint32_t>(get_le(in, 4));
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto layer_count = static_cast<std::uint32_t>(get_le(in, 4));
  if (layer_count == 0 || layer_count > 1024) throw FormatError("implausible layer count");
  std::vector<Layer> layers;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    const auto in_dim = static_cast<Eigen::Index>(get_le(in, 4));
    const auto out_dim = static_cast<Eigen::Index>(get_le(in, 4));
    const auto tag = get_le(in, 1);
    if (tag > 1) throw FormatError("unknown activation tag " + std::to_string(tag));
    if (in_dim <= 0 || out_dim <= 0 || in_dim * out_dim > (Eigen::Index{1} << 28)) {
      throw FormatError("implausible layer shape");
    }
    Layer layer;
    layer.activation = static_cast<Activation>(tag);
    layer.weights.resize(out_dim, in_dim);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      layer.weights.data()[i] = std::bit_cast<double>(get_le(in, 8));
    }
    layer.bias.resize(out_dim);
    for (Eigen::Index i = 0; i < out_dim; ++i) layer.bias[i] = std::bit_cast<double>(get_le(in, 8));
    layers.push_back(std::move(layer));
  }
  try {
    return Network(std::move(layers));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("checkpoint layers do not compose: ") + e.what());
  }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_checkpoint(net, out);
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace smoothcert::nn
