#pragma once

#include "camiqa/autodiff.hpp"
#include "camiqa/config.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace camiqa {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_regression = 0.0;
  double train_ranking = 0.0;
  double val_srcc = 0.0;    // NaN when no validation scenes exist
  double val_fg_acc = 0.0;  // NaN when no hard fine-grained pair exists

  bool operator==(const EpochMetrics&) const;
};

/// Single-file container: magic, version, flat config text, metric history
/// and named weight blobs with shapes.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  KeyValueConfig config;
  std::vector<EpochMetrics> history;
  std::map<std::string, ad::Matrix> weights;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws DataError on a bad magic, unknown version or truncated file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace camiqa
