#pragma once

#include "camiqa/gcpf.hpp"
#include "camiqa/heads.hpp"
#include "camiqa/hfe.hpp"
#include "camiqa/parameters.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>

namespace camiqa {

struct ModelConfig {
  BackboneConfig backbone;
  bool use_gcpf = false;
  int graph_dim = 128;
  int graph_heads = 4;
  double score_bias = 3.0;
  ParameterRanges ranges;

  void validate() const;
};

/// Backbone -> human-aware features -> optional parameter fusion -> heads.
/// All weights live in `store`; modules hold pointers into it, so the model
/// is neither copyable nor movable.
class QualityModel {
 public:
  QualityModel(const ModelConfig& cfg, std::uint64_t seed);
  QualityModel(const QualityModel&) = delete;
  QualityModel& operator=(const QualityModel&) = delete;

  /// Backbone map plus F_f (1 x C): F_gcn when fusion is enabled and params
  /// are present, F_q otherwise.
  ad::Var features(ad::Tape& tape, const Image& image, std::span<const Box> boxes,
                   const std::optional<CameraParameters>& params, HfeTrace* hfe_trace = nullptr,
                   GcpfTrace* gcpf_trace = nullptr) const;

  /// Inference feature of an already preprocessed image.
  Eigen::RowVectorXd embed(const Image& image, std::span<const Box> boxes,
                           const std::optional<CameraParameters>& params) const;

  const ModelConfig& config() const { return cfg_; }
  int channels() const { return cfg_.backbone.channels; }

  nn::ParameterStore store;
  std::unique_ptr<Backbone> backbone;
  HumanAwareExtractor hfe;
  std::optional<ParameterFusion> gcpf;
  QualityHeads heads;

 private:
  ModelConfig cfg_;
};

}  // namespace camiqa
