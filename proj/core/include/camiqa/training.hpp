#pragma once

#include "camiqa/checkpoint.hpp"
#include "camiqa/config.hpp"
#include "camiqa/evaluation.hpp"
#include "camiqa/model.hpp"
#include "camiqa/random.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <vector>

namespace camiqa {

struct TrainConfig {
  double learning_rate_max = 1e-5;
  double lr_floor_divisor = 100.0;  // cosine floor = max / divisor
  int batch_size = 64;
  int epochs = 5;
  int resize = 256;
  int crop = 224;
  double lambda_reg = 1.0;
  double lambda_rank = 2.0;
  double weight_decay = 0.01;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  bool use_gcpf = false;
  BackboneConfig backbone;
  int graph_dim = 128;
  int graph_heads = 4;
  double score_bias = 3.0;
  ParameterRanges ranges;

  /// Keys "train.*", "backbone.*", "graph.*" and "range.<param>.min|max".
  static TrainConfig from_config(const KeyValueConfig& cfg);
  void write_to(KeyValueConfig& cfg) const;
  void validate() const;
  ModelConfig model_config() const;
};

/// Learning rate at `step` of `total_steps`: cosine from max to max/divisor,
/// reaching the floor exactly at the last step.
double cosine_lr(long step, long total_steps, double max_lr, double floor_divisor);

struct FlipDraw {
  bool horizontal = false;
  bool vertical = false;
};

/// Geometric draw shared by both images of a pair.
struct AugmentDraw {
  int crop_x = 0;
  int crop_y = 0;
  FlipDraw flip;
};

AugmentDraw draw_augment(Rng& rng, int resize, int crop);
/// Centre crop, no flip.
AugmentDraw center_draw(int resize, int crop);

/// A network-ready image with boxes in its own pixel frame.
struct PreparedImage {
  Image image;
  std::vector<Box> boxes;
  std::optional<CameraParameters> params;
};

/// Flips pixels and boxes; quality-neutral.
PreparedImage augment(const PreparedImage& in, const FlipDraw& flip);

/// Resize to resize x resize, crop at the draw offset, then flip.
/// Boxes are mapped and clipped; boxes leaving the crop are dropped.
PreparedImage preprocess(const ImageSample& sample, int resize, int crop, const AugmentDraw& draw);

/// Pair indices per batch for one epoch (seeded shuffle, last batch short).
std::vector<std::vector<size_t>> make_batches(size_t n_pairs, int batch_size, std::uint64_t seed,
                                              int epoch);

/// Decoupled weight decay Adam over every tensor of a store.
class AdamW {
 public:
  explicit AdamW(nn::ParameterStore& store, double weight_decay = 0.01, double beta1 = 0.9,
                 double beta2 = 0.999, double eps = 1e-8);

  void step(double lr);
  long steps() const { return t_; }

 private:
  nn::ParameterStore& store_;
  double wd_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<ad::Matrix> m_;
  std::vector<ad::Matrix> v_;
};

/// Images, MOS and preference pairs resolved against a manifest directory.
struct TrainingData {
  std::filesystem::path root;
  DatasetManifest manifest;
  std::vector<MOSRecord> mos;
  std::vector<PairPreference> pairs;
};

struct TrainResult {
  std::unique_ptr<QualityModel> model;
  Checkpoint checkpoint;
};

/// Rejects pairs that touch a test scene (DataError) and non-finite losses
/// (NumericalError). `log` receives one line per epoch when non-null.
TrainResult train(const TrainingData& data, const TrainConfig& cfg, std::ostream* log = nullptr);

/// Pairs of train-split scenes only.
std::vector<PairPreference> training_pairs(const DatasetManifest& manifest,
                                           std::span<const PairPreference> pairs);

Checkpoint make_checkpoint(const QualityModel& model, const TrainConfig& cfg,
                           std::vector<EpochMetrics> history = {});
std::unique_ptr<QualityModel> model_from_checkpoint(const Checkpoint& ckpt);
TrainConfig config_from_checkpoint(const Checkpoint& ckpt);

/// Metrics over the images and fine-grained pairs of the chosen split.
MetricReport evaluate_model(const QualityModel& model, const TrainConfig& cfg,
                            const TrainingData& data, Split split = Split::test);
MetricReport evaluate_checkpoint(const Checkpoint& ckpt, const TrainingData& data,
                                 Split split = Split::test);

}  // namespace camiqa
