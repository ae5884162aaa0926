#include "camiqa/model.hpp"

#include "camiqa/error.hpp"
#include "camiqa/random.hpp"

namespace camiqa {

void ModelConfig::validate() const {
  backbone.validate();
  if (graph_heads < 1 || graph_dim < graph_heads || graph_dim % graph_heads != 0) {
    throw UsageError("graph dimension must be a positive multiple of the head count");
  }
  ranges.validate();
}

QualityModel::QualityModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg.validate();
  Rng rng(derive_seed(seed, {hash_tag("model-init")}));
  const int c = cfg.backbone.channels;
  backbone = std::make_unique<SmallConvBackbone>(store, cfg.backbone, rng);
  hfe = HumanAwareExtractor(store, "hfe", c, rng);
  if (cfg.use_gcpf) gcpf.emplace(store, "gcpf", c, cfg.graph_dim, cfg.graph_heads, rng);
  heads = QualityHeads(store, "heads", c, rng, cfg.score_bias);
}

ad::Var QualityModel::features(ad::Tape& tape, const Image& image, std::span<const Box> boxes,
                               const std::optional<CameraParameters>& params, HfeTrace* hfe_trace,
                               GcpfTrace* gcpf_trace) const {
  const FeatureMap map = extract_backbone_features(tape, *backbone, image);
  const auto resolved = resolve_human_boxes(boxes, image.width, image.height);
  ad::Var f_q = hfe(tape, map, resolved, hfe_trace);
  if (gcpf && params) {
    return (*gcpf)(tape, f_q, normalize_params(*params, cfg_.ranges), gcpf_trace);
  }
  return f_q;
}

Eigen::RowVectorXd QualityModel::embed(const Image& image, std::span<const Box> boxes,
                                       const std::optional<CameraParameters>& params) const {
  ad::Tape tape(false);
  const ad::Var f = features(tape, image, boxes, params);
  if (!f.value().allFinite()) throw NumericalError("non-finite feature vector");
  return f.value().row(0);
}

}  // namespace camiqa
