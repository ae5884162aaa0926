#include "camiqa/hfe.hpp"

#include "camiqa/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace camiqa {

using ad::Var;

void BackboneConfig::validate() const {
  if (channels < 8 || channels % 2 != 0) {
    throw UsageError("backbone channels must be even and >= 8");
  }
  if (depth < 1 || depth > 5) throw UsageError("backbone depth must be within 1..5");
  if ((channels >> (depth - 1)) < 1 || (channels % (1 << (depth - 1))) != 0) {
    throw UsageError("backbone channels must be divisible by 2^(depth-1)");
  }
}

SmallConvBackbone::SmallConvBackbone(nn::ParameterStore& store, const BackboneConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  cfg.validate();
  int in = 3;
  for (int s = 0; s < cfg.depth; ++s) {
    const int out = cfg.channels >> (cfg.depth - 1 - s);
    stages_.emplace_back(store, "backbone.stage" + std::to_string(s + 1), in, out, s == 0 ? 4 : 3,
                         rng);
    in = out;
  }
}

FeatureMap SmallConvBackbone::forward(ad::Tape& tape, const Image& image) const {
  Var x = tape.constant(image.pixels);
  int h = image.height, w = image.width;
  for (size_t s = 0; s < stages_.size(); ++s) {
    const auto g = ad::ConvGeometry::same_ceil(h, w, stages_[s].kernel, s == 0 ? 4 : 2);
    x = ad::relu(stages_[s](tape, x, g));
    h = g.out_h;
    w = g.out_w;
  }
  return FeatureMap{x, h, w, cfg_.stride()};
}

FeatureMap extract_backbone_features(ad::Tape& tape, const Backbone& backbone, const Image& image) {
  if (image.width < 32 || image.height < 32) {
    throw DataError("image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                    " is smaller than 32x32");
  }
  return backbone.forward(tape, image);
}

std::vector<Box> resolve_human_boxes(const ImageSample& image) {
  return resolve_human_boxes(image.human_boxes, image.image.width, image.image.height);
}

std::vector<Box> resolve_human_boxes(std::span<const Box> boxes, int width, int height) {
  if (!boxes.empty()) return {boxes.begin(), boxes.end()};
  return {Box{0.0, 0.0, static_cast<double>(width), static_cast<double>(height)}};
}

ad::GridBox to_grid(const Box& box, int stride, int h, int w) {
  const double s = stride;
  return ad::GridBox{std::clamp(box.x0 / s, 0.0, static_cast<double>(w)),
                     std::clamp(box.y0 / s, 0.0, static_cast<double>(h)),
                     std::clamp(box.x1 / s, 0.0, static_cast<double>(w)),
                     std::clamp(box.y1 / s, 0.0, static_cast<double>(h))};
}

RoiFusion::RoiFusion(nn::ParameterStore& store, const std::string& name, int channels, Rng& rng)
    : reduce(store, name + ".reduce", channels, channels / 2, rng),
      project(store, name + ".project", channels + channels / 2, channels, rng) {}

FeatureMap RoiFusion::operator()(ad::Tape& tape, const FeatureMap& map, std::span<const Box> boxes,
                                 Var* human_region) const {
  std::vector<ad::GridBox> grid;
  for (const auto& b : boxes) {
    const auto g = to_grid(b, map.stride, map.h, map.w);
    if (g.x1 > g.x0 && g.y1 > g.y0) grid.push_back(g);
  }
  if (grid.empty()) {
    grid.push_back(ad::GridBox{0.0, 0.0, static_cast<double>(map.w), static_cast<double>(map.h)});
  }
  Var pooled = ad::roi_align_mean(map.data, map.h, map.w, grid, 3);
  Var r_h = reduce(tape, pooled);
  if (human_region) *human_region = r_h;
  const std::array<Var, 2> parts{map.data, ad::broadcast_rows(r_h, map.data.rows())};
  Var fused = project(tape, ad::concat_cols(parts));
  return FeatureMap{fused, map.h, map.w, map.stride};
}

std::vector<int> Partition::cells(int k) const {
  const int br = k / 3, bc = k % 3;
  std::vector<int> out;
  out.reserve(static_cast<size_t>(tile_h(k) * tile_w(k)));
  for (int y = row_edges[br]; y < row_edges[br + 1]; ++y) {
    for (int x = col_edges[bc]; x < col_edges[bc + 1]; ++x) out.push_back(y * w + x);
  }
  return out;
}

namespace {

std::array<int, 4> band_edges(double lo, double hi, int n) {
  int a = static_cast<int>(std::floor(lo));
  int b = static_cast<int>(std::ceil(hi));
  a = std::clamp(a, 1, n - 2);
  b = std::clamp(b, a + 1, n - 1);
  return {0, a, b, n};
}

}  // namespace

Partition partition_nine(int h, int w, std::span<const Box> boxes, int stride) {
  if (h < 3 || w < 3) {
    throw DataError("feature grid " + std::to_string(h) + "x" + std::to_string(w) +
                    " is too small for nine partitions");
  }
  double x0 = 0.0, y0 = 0.0, x1 = w, y1 = h;
  if (!boxes.empty()) {
    x0 = y0 = std::numeric_limits<double>::infinity();
    x1 = y1 = -std::numeric_limits<double>::infinity();
    for (const auto& b : boxes) {
      const auto g = to_grid(b, stride, h, w);
      x0 = std::min(x0, g.x0);
      y0 = std::min(y0, g.y0);
      x1 = std::max(x1, g.x1);
      y1 = std::max(y1, g.y1);
    }
  }
  Partition p;
  p.h = h;
  p.w = w;
  p.row_edges = band_edges(y0, y1, h);
  p.col_edges = band_edges(x0, x1, w);
  return p;
}

PartitionTransform::PartitionTransform(nn::ParameterStore& store, const std::string& name,
                                       int channels, Rng& rng) {
  for (int k = 0; k < 9; ++k) {
    convs[static_cast<size_t>(k)] =
        nn::Conv2d(store, name + ".tile" + std::to_string(k), channels, channels, 3, rng);
  }
}

FeatureMap PartitionTransform::operator()(ad::Tape& tape, const FeatureMap& map,
                                          const Partition& partition) const {
  std::vector<Var> tiles;
  std::vector<std::vector<int>> rows;
  for (int k = 0; k < 9; ++k) {
    auto cells = partition.cells(k);
    Var tile = ad::gather_rows(map.data, cells);
    const auto g = ad::ConvGeometry::same_ceil(partition.tile_h(k), partition.tile_w(k), 3, 1);
    tiles.push_back(ad::add(ad::relu(convs[static_cast<size_t>(k)](tape, tile, g)), tile));
    rows.push_back(std::move(cells));
  }
  return FeatureMap{ad::scatter_rows(tiles, rows, map.data.rows()), map.h, map.w, map.stride};
}

CrossAttention::CrossAttention(nn::ParameterStore& store, const std::string& name, int channels,
                               Rng& rng)
    : query(store, name + ".query", channels, channels, rng, false, false),
      key(store, name + ".key", channels, channels, rng, false, false),
      value(store, name + ".value", channels, channels, rng, false, false),
      output(store, name + ".output", channels, channels, rng, false) {}

Var CrossAttention::operator()(ad::Tape& tape, Var f_h, Var cells, ad::Matrix* weights) const {
  Var q = query(tape, f_h);
  Var k = key(tape, cells);
  Var v = value(tape, cells);
  const double scale = 1.0 / std::sqrt(static_cast<double>(f_h.cols()));
  Var attn = ad::softmax_rows(ad::scale(ad::matmul(q, ad::transpose(k)), scale));
  if (weights) *weights = attn.value();
  return output(tape, ad::matmul(attn, v));
}

HumanAwareExtractor::HumanAwareExtractor(nn::ParameterStore& store, const std::string& name,
                                         int channels, Rng& rng)
    : roi(store, name + ".roi", channels, rng),
      partitions(store, name + ".partition", channels, rng),
      attention(store, name + ".attention", channels, rng) {}

Var HumanAwareExtractor::operator()(ad::Tape& tape, const FeatureMap& map,
                                    std::span<const Box> boxes, HfeTrace* trace) const {
  Var human_region;
  FeatureMap enhanced = roi(tape, map, boxes, &human_region);
  Partition part = partition_nine(map.h, map.w, boxes, map.stride);
  FeatureMap combined = partitions(tape, enhanced, part);
  Var f_h = ad::mean_rows(combined.data);
  ad::Matrix attn;
  Var f_q = attention(tape, f_h, map.data, &attn);
  if (trace) {
    trace->human_region = human_region;
    trace->enhanced = enhanced;
    trace->combined = combined;
    trace->f_h = f_h;
    trace->attention = std::move(attn);
    trace->partition = part;
  }
  return f_q;
}

}  // namespace camiqa
