#pragma once

// Human-aware feature extraction: backbone map, human-region ROI fusion,
// nine-tile residual transforms and a single-query cross-attention.

#include "camiqa/nn.hpp"
#include "camiqa/types.hpp"

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace camiqa {

struct BackboneConfig {
  int channels = 64;  // C, even and >= 8
  int depth = 4;      // stages; stride is 4 * 2^(depth-1)
  std::string pretrained_path;  // optional checkpoint holding "backbone.*" blobs

  int stride() const { return 4 << (depth - 1); }
  void validate() const;
  bool operator==(const BackboneConfig&) const = default;
};

/// Cell-major grid (h*w) x C on a tape; `stride` is input pixels per cell.
struct FeatureMap {
  ad::Var data;
  int h = 0;
  int w = 0;
  int stride = 1;

  Eigen::Index channels() const { return data.cols(); }
};

/// Image to feature-map interface. External pretrained models plug in here.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual FeatureMap forward(ad::Tape& tape, const Image& image) const = 0;
  virtual int channels() const = 0;
  virtual int stride() const = 0;
};

/// Stage 1 is a 4x4 stride-4 patch embedding; later stages are 3x3 stride-2
/// convolutions. Channels double per stage and end at C. ReLU after each stage.
class SmallConvBackbone : public Backbone {
 public:
  SmallConvBackbone(nn::ParameterStore& store, const BackboneConfig& cfg, Rng& rng);

  FeatureMap forward(ad::Tape& tape, const Image& image) const override;
  int channels() const override { return cfg_.channels; }
  int stride() const override { return cfg_.stride(); }

 private:
  BackboneConfig cfg_;
  std::vector<nn::Conv2d> stages_;
};

/// Throws DataError for images smaller than 32x32.
FeatureMap extract_backbone_features(ad::Tape& tape, const Backbone& backbone, const Image& image);

/// Manifest boxes if any, else one full-image box.
std::vector<Box> resolve_human_boxes(const ImageSample& image);
std::vector<Box> resolve_human_boxes(std::span<const Box> boxes, int width, int height);

/// Pixel box to feature-grid coordinates, clipped to the grid.
ad::GridBox to_grid(const Box& box, int stride, int h, int w);

/// ROI-align every box (3x3 bins), average into one C vector, reduce to C/2,
/// append to each cell and project 3C/2 -> C.
class RoiFusion {
 public:
  RoiFusion() = default;
  RoiFusion(nn::ParameterStore& store, const std::string& name, int channels, Rng& rng);

  /// `human_region` receives R^h (1 x C/2) when non-null.
  FeatureMap operator()(ad::Tape& tape, const FeatureMap& map, std::span<const Box> boxes,
                        ad::Var* human_region = nullptr) const;

  nn::Linear reduce;
  nn::Linear project;
};

/// 3x3 tiling of a feature grid around the union of the human boxes.
struct Partition {
  std::array<int, 4> row_edges{};  // band k spans [row_edges[k], row_edges[k+1])
  std::array<int, 4> col_edges{};
  int h = 0;
  int w = 0;

  int tile_h(int k) const { return row_edges[k / 3 + 1] - row_edges[k / 3]; }
  int tile_w(int k) const { return col_edges[k % 3 + 1] - col_edges[k % 3]; }
  /// Row-major cell indices of tile k (k = 3 * band_row + band_col).
  std::vector<int> cells(int k) const;
};

/// Central tile = cells touched by the union box, clamped so every tile keeps
/// at least one row and column. Requires h, w >= 3.
Partition partition_nine(int h, int w, std::span<const Box> boxes, int stride);

/// F_k = ReLU(conv3x3_k(M_k)) + M_k per tile (zero padding at tile borders),
/// reassembled in place.
class PartitionTransform {
 public:
  PartitionTransform() = default;
  PartitionTransform(nn::ParameterStore& store, const std::string& name, int channels, Rng& rng);

  FeatureMap operator()(ad::Tape& tape, const FeatureMap& map, const Partition& partition) const;

  std::array<nn::Conv2d, 9> convs;
};

/// One query (F_h) against the cells of the backbone map: softmax(QK^T/sqrt(C))V,
/// then an output projection. Q/K/V have no bias.
class CrossAttention {
 public:
  CrossAttention() = default;
  CrossAttention(nn::ParameterStore& store, const std::string& name, int channels, Rng& rng);

  /// f_h: 1 x C, cells: N x C. `weights` receives the 1 x N attention row.
  ad::Var operator()(ad::Tape& tape, ad::Var f_h, ad::Var cells, ad::Matrix* weights = nullptr) const;

  nn::Linear query;
  nn::Linear key;
  nn::Linear value;
  nn::Linear output;
};

struct HfeTrace {
  ad::Var human_region;
  FeatureMap enhanced;
  FeatureMap combined;
  ad::Var f_h;
  ad::Matrix attention;
  Partition partition;
};

class HumanAwareExtractor {
 public:
  HumanAwareExtractor() = default;
  HumanAwareExtractor(nn::ParameterStore& store, const std::string& name, int channels, Rng& rng);

  /// F_q (1 x C) from a backbone map and pixel-space human boxes.
  ad::Var operator()(ad::Tape& tape, const FeatureMap& map, std::span<const Box> boxes,
                     HfeTrace* trace = nullptr) const;

  RoiFusion roi;
  PartitionTransform partitions;
  CrossAttention attention;
};

}  // namespace camiqa
