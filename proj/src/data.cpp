#include "smoothcert/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "smoothcert/errors.hpp"

namespace smoothcert::data {
namespace {

std::uint32_t read_be32(std::istream& in, const std::string& what) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw FormatError(what + ": truncated header");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                              static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b.data(), 4);
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t bytes, const std::string& what) {
  std::vector<unsigned char> buf(bytes);
  if (bytes > 0 && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes))) {
    throw FormatError(what + ": truncated payload");
  }
  return buf;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

// Vertices of a regular simplex with unit edge, one row per class, living in
// the first class_count - 1 coordinates.
std::vector<std::vector<double>> simplex_vertices(std::size_t k) {
  // Center the standard basis of R^k and express it in an orthonormal basis
  // of the sum-zero hyperplane (Gram-Schmidt on e_i - e_k).
  std::vector<std::vector<double>> basis;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    std::vector<double> v(k, 0.0);
    v[i] = 1.0;
    v[k - 1] = -1.0;
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += v[j] * b[j];
      for (std::size_t j = 0; j < k; ++j) v[j] -= dot * b[j];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  const double to_unit_edge = 1.0 / std::sqrt(2.0);
  std::vector<std::vector<double>> vertices(k, std::vector<double>(k - 1, 0.0));
  for (std::size_t c = 0; c < k; ++c) {
    // <e_c - centroid, b_j> = b_j[c] since b_j is orthogonal to the all-ones vector.
    for (std::size_t j = 0; j + 1 < k; ++j) vertices[c][j] = basis[j][c] * to_unit_edge;
  }
  return vertices;
}

}  // namespace

Dataset::Dataset(std::size_t dim, std::size_t class_count, std::vector<double> features,
                 std::vector<std::size_t> labels, std::optional<FeatureBox> domain)
    : dim_(dim),
      class_count_(class_count),
      features_(std::move(features)),
      labels_(std::move(labels)),
      domain_(domain) {
  if (dim_ == 0) throw InvalidArgument("dataset dimension must be positive");
  if (features_.size() != labels_.size() * dim_) {
    throw InvalidArgument("feature buffer size does not match labels x dim");
  }
  for (std::size_t label : labels_) {
    if (label >= class_count_) throw InvalidArgument("label out of range");
  }
  if (domain_) {
    for (double v : features_) {
      if (!(v >= domain_->lo && v <= domain_->hi)) throw InvalidArgument("feature outside the declared domain");
    }
  }
}

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  if (begin > size()) throw InvalidArgument("slice start past end of dataset");
  count = std::min(count, size() - begin);
  std::vector<double> features(features_.begin() + static_cast<std::ptrdiff_t>(begin * dim_),
                               features_.begin() + static_cast<std::ptrdiff_t>((begin + count) * dim_));
  std::vector<std::size_t> labels(labels_.begin() + static_cast<std::ptrdiff_t>(begin),
                                  labels_.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return Dataset(dim_, class_count_, std::move(features), std::move(labels), domain_);
}

Dataset make_blobs(const BlobSpec& spec) {
  if (spec.n_per_class == 0 || spec.class_count == 0 || spec.dim == 0) {
    throw InvalidArgument("blob counts and dimension must be positive");
  }
  if (spec.class_count > spec.dim + 1) {
    throw InvalidArgument("equidistant blob centers need class_count <= dim + 1");
  }
  if (!(spec.separation >= 0.0) || !(spec.cluster_std >= 0.0)) {
    throw InvalidArgument("separation and cluster_std must be nonnegative");
  }
  const auto vertices = simplex_vertices(spec.class_count);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = spec.n_per_class * spec.class_count;
  std::vector<double> features(n * spec.dim, 0.0);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % spec.class_count;
    labels[i] = c;
    for (std::size_t j = 0; j < spec.dim; ++j) {
      const double center = j < vertices[c].size() ? spec.separation * vertices[c][j] : 0.0;
      features[i * spec.dim + j] = center + spec.cluster_std * normal(rng);
    }
  }
  return Dataset(spec.dim, spec.class_count, std::move(features), std::move(labels), std::nullopt);
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  auto image_in = open_input(images);
  const std::string image_name = images.string();
  if (read_be32(image_in, image_name) != kIdxImageMagic) {
    throw FormatError(image_name + ": wrong IDX image magic");
  }
  const std::uint32_t count = read_be32(image_in, image_name);
  const std::uint32_t rows = read_be32(image_in, image_name);
  const std::uint32_t cols = read_be32(image_in, image_name);
  const std::size_t dim = std::size_t{rows} * cols;
  if (dim == 0) throw FormatError(image_name + ": zero-sized images");
  const auto pixels = read_payload(image_in, std::size_t{count} * dim, image_name);

  auto label_in = open_input(labels);
  const std::string label_name = labels.string();
  if (read_be32(label_in, label_name) != kIdxLabelMagic) {
    throw FormatError(label_name + ": wrong IDX label magic");
  }
  const std::uint32_t label_count = read_be32(label_in, label_name);
  if (label_count != count) {
    throw FormatError("image count " + std::to_string(count) + " != label count " +
                      std::to_string(label_count));
  }
  const auto raw_labels = read_payload(label_in, count, label_name);

  std::vector<double> features(pixels.size());
  std::transform(pixels.begin(), pixels.end(), features.begin(),
                 [](unsigned char p) { return static_cast<double>(p) / 255.0; });
  std::vector<std::size_t> out_labels(raw_labels.begin(), raw_labels.end());
  std::size_t class_count = 1;
  for (std::size_t l : out_labels) class_count = std::max(class_count, l + 1);
  return Dataset(dim, class_count, std::move(features), std::move(out_labels), FeatureBox{0.0, 1.0});
}

void write_idx(const Dataset& dataset, std::uint32_t rows, std::uint32_t cols,
               const std::filesystem::path& images, const std::filesystem::path& labels) {
  if (std::size_t{rows} * cols != dataset.dim()) {
    throw InvalidArgument("rows * cols must equal the dataset dimension");
  }
  std::ofstream image_out(images, std::ios::binary);
  std::ofstream label_out(labels, std::ios::binary);
  if (!image_out || !label_out) throw FormatError("cannot open IDX output files");

  const auto n = static_cast<std::uint32_t>(dataset.size());
  write_be32(image_out, kIdxImageMagic);
  write_be32(image_out, n);
  write_be32(image_out, rows);
  write_be32(image_out, cols);
  write_be32(label_out, kIdxLabelMagic);
  write_be32(label_out, n);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.features(i)) {
      const double clamped = std::clamp(v, 0.0, 1.0);
      image_out.put(static_cast<char>(static_cast<unsigned char>(std::lround(clamped * 255.0))));
    }
    if (dataset.label(i) > 255) throw InvalidArgument("IDX labels must fit in one byte");
    label_out.put(static_cast<char>(static_cast<unsigned char>(dataset.label(i))));
  }
  if (!image_out || !label_out) throw FormatError("failed writing IDX files");
}

}  // namespace smoothcert::data
