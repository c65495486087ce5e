#pragma once

// Fully connected ReLU classifier with exact backpropagation, SGD training in
// plain, Gaussian-augmentation and stability modes, and a versioned binary
// checkpoint format.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "smoothcert/data.hpp"
#include "smoothcert/smoothing.hpp"

namespace smoothcert::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { identity = 0, relu = 1 };

struct Layer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::identity;
};

class Network {
 public:
  // Throws InvalidArgument unless adjacent layer shapes compose.
  explicit Network(std::vector<Layer> layers);

  /// widths = {input, hidden..., classes}. Hidden layers use ReLU and the
  /// output layer is linear; weights ~ U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)),
  /// biases zero.
  static Network initialize(std::span<const std::size_t> widths, std::uint64_t seed);

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(layers_.front().weights.cols()); }
  std::size_t class_count() const noexcept { return static_cast<std::size_t>(layers_.back().weights.rows()); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

 private:
  std::vector<Layer> layers_;
};

struct ForwardResult {
  Vector logits;
  Vector probabilities;
};

/// Max-subtracted softmax.
Vector softmax(const Vector& logits);

/// Throws InvalidArgument when x.size() != input_dim().
ForwardResult forward(const Network& net, std::span<const double> x);

double cross_entropy(const Network& net, std::span<const double> x, std::size_t label);

/// -sum_j P(j | x) log P(j | x_noisy), with P(. | x) treated as a constant target.
double stability_loss(const Network& net, std::span<const double> x, std::span<const double> x_noisy);

// Gradients of the cross-entropy loss at one example.
struct Gradient {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Vector input;
  double loss = 0.0;
};

Gradient gradient(const Network& net, std::span<const double> x, std::size_t label);

/// d loss / d x only.
Vector input_gradient(const Network& net, std::span<const double> x, std::size_t label);

enum class TrainMode { plain, gaussian_augment, stability };

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double stability_gamma = 0.0;
  double noise_sigma = 0.0;
  TrainMode mode = TrainMode::plain;
  std::uint64_t seed = 0;
};

struct EpochStats {
  std::size_t epoch;
  double loss;            // mean objective over the epoch's examples
  double train_accuracy;  // clean-input accuracy measured during the epoch
};

struct TrainResult {
  Network network;
  std::vector<EpochStats> trace;
};

/// Minibatch SGD on L* + gamma * L_stability. Noisy copies are redrawn for
/// every example in every epoch. Throws TrainingError on a non-finite loss.
TrainResult train(Network net, const data::Dataset& data, const TrainConfig& cfg);

/// Fraction of examples whose argmax logit equals the label.
double accuracy(const Network& net, const data::Dataset& data);

// Argmax-of-logits view of a network, for use as a smoothing base classifier.
class NetworkClassifier final : public smoothing::BaseClassifier {
 public:
  explicit NetworkClassifier(Network net) : net_(std::move(net)) {}

  std::size_t num_classes() const override { return net_.class_count(); }
  std::size_t classify(std::span<const double> x) const override;
  const Network& network() const noexcept { return net_; }

 private:
  Network net_;
};

// Checkpoint layout (little-endian): 8-byte magic "SMCERTNN", u32 version,
// u32 layer count, then per layer u32 in, u32 out, u8 activation, out*in f64
// weights row-major, out f64 biases.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const Network& net, std::ostream& out);
Network read_checkpoint(std::istream& in);
void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace smoothcert::nn
