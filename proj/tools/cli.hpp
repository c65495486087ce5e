#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "smoothcert/data.hpp"
#include "smoothcert/nn.hpp"

namespace smoothcert::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericalError = 3 };

// Where a command's examples come from.
struct DatasetSpec {
  std::string kind = "blobs";  // blobs | idx
  data::BlobSpec blobs;
  std::filesystem::path images;
  std::filesystem::path labels;
  std::size_t offset = 0;
  std::size_t limit = 0;  // 0 keeps everything after offset
};

data::Dataset load_dataset(const DatasetSpec& spec);

struct TrainJob {
  nn::TrainConfig train;
  DatasetSpec dataset;
  std::vector<std::size_t> hidden{64};
  std::filesystem::path checkpoint;
  std::filesystem::path metrics;
};

/// Parses a flat JSON train config. Relative paths resolve against `base`.
/// Unknown keys and ill-typed values throw InvalidArgument naming the field.
TrainJob parse_train_config(const nlohmann::json& config, const std::filesystem::path& base);

/// Radii used for accuracy curves when none are given: 0, 0.05, ..., 2.
std::vector<double> default_radii();

/// Runs one command line (args excludes the program name). Diagnostics go to
/// `err`, short progress lines to `out`. Returns an ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace smoothcert::cli
