#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace smoothcert::data {

// Closed interval every feature value is known to lie in.
struct FeatureBox {
  double lo = 0.0;
  double hi = 1.0;

  friend bool operator==(const FeatureBox&, const FeatureBox&) = default;
};

// Immutable labeled examples stored row-major.
class Dataset {
 public:
  Dataset(std::size_t dim, std::size_t class_count, std::vector<double> features,
          std::vector<std::size_t> labels, std::optional<FeatureBox> domain);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t class_count() const noexcept { return class_count_; }
  // Empty for unbounded feature spaces (blobs); [0, 1] for images.
  const std::optional<FeatureBox>& domain() const noexcept { return domain_; }

  std::span<const double> features(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  std::size_t label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }

  // Rows [begin, begin + count) as a new dataset.
  Dataset slice(std::size_t begin, std::size_t count) const;

 private:
  std::size_t dim_;
  std::size_t class_count_;
  std::vector<double> features_;
  std::vector<std::size_t> labels_;
  std::optional<FeatureBox> domain_;
};

struct BlobSpec {
  std::size_t n_per_class = 100;
  std::size_t class_count = 2;
  std::size_t dim = 2;
  double separation = 4.0;
  double cluster_std = 1.0;
  std::uint64_t seed = 0;
};

/// Isotropic Gaussian clusters whose centers sit on a regular simplex with edge
/// `separation`. Requires class_count <= dim + 1. Examples are interleaved by
/// class (0, 1, ..., k-1, 0, 1, ...).
Dataset make_blobs(const BlobSpec& spec);

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Parses an IDX image file (magic 0x803, N x rows x cols unsigned bytes) and
/// an IDX label file (magic 0x801); pixels are scaled to [0, 1] by 1/255.
/// Throws FormatError on a bad magic, truncated payload, or count mismatch.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Writes features as round(255 x) bytes in an N x rows x cols image file and
/// the labels as bytes. rows * cols must equal dataset.dim().
void write_idx(const Dataset& dataset, std::uint32_t rows, std::uint32_t cols,
               const std::filesystem::path& images, const std::filesystem::path& labels);

}  // namespace smoothcert::data
