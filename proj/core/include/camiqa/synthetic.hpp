#pragma once

#include "camiqa/parameters.hpp"
#include "camiqa/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace camiqa {

/// A procedurally rendered scene with a known best camera configuration.
struct SceneSpec {
  std::string scene_id;
  std::uint64_t base_seed = 0;
  CameraParameters optimal_params;
  Box face_box{0.4, 0.3, 0.6, 0.56};  // normalized to the unit square
  int n_variants = 10;
  int width = 96;
  int height = 96;

  void validate() const;
};

/// Latent ground-truth quality, each attribute in [1,5].
using TrueQuality = AttributeArray;

/// Signed normalized deviations n(p) - n(optimal), unclamped.
std::array<double, kNumParams> parameter_deviations(const CameraParameters& params,
                                                    const CameraParameters& optimal,
                                                    const ParameterRanges& ranges = {});

/// Exposure offset in photographic stops relative to the optimum
/// (shutter and ISO add light, a larger f-number removes it).
double exposure_stops(const CameraParameters& params, const CameraParameters& optimal);

/// 5 minus smooth quadratic penalties of the deviations, clamped to [1,5].
/// sharpness <- aperture, sharpness; exposure <- exposure stops plus
/// shutter/iso/aperture/contrast; noise <- iso (and sharpening);
/// face <- sharpness and exposure penalties plus white balance and saturation;
/// overall = 0.4 face + 0.2 (sharpness + exposure + noise).
TrueQuality true_quality(const CameraParameters& params, const CameraParameters& optimal,
                         const ParameterRanges& ranges = {});

/// Undistorted procedural image of a scene (gradient, textured panel, face).
Image render_clean(const SceneSpec& scene);

/// Deterministic render with parameter-driven distortions; params == optimal
/// returns exactly render_clean(scene).
ImageSample render_image(const SceneSpec& scene, const CameraParameters& params,
                         const std::string& image_id, const ParameterRanges& ranges = {});

/// round(clamp(tq + N(0, noise_sd), 1, 5)) per attribute for each annotator
/// "ann00", "ann01", ...
std::vector<AnnotationRecord> simulate_annotations(const TrueQuality& tq, int n_annotators,
                                                   double noise_sd, std::uint64_t seed,
                                                   const std::string& image_id = "");

/// Paired judgements on overall quality (1: p better, 0: q better, 0.5: same).
std::vector<double> simulate_votes(const TrueQuality& p, const TrueQuality& q, int n_votes,
                                   double noise_sd, std::uint64_t seed);

struct GeneratorOptions {
  int width = 96;
  int height = 96;
  double train_fraction = 0.8;
  /// All scenes share one optimum: quality becomes a function of parameters alone.
  bool shared_optimum = false;
  int votes_per_pair = 5;
  /// Annotators answering at random, to exercise screening.
  int spammers = 0;
  /// Half-width of per-variant deviations in normalized units.
  double max_deviation = 0.35;
  ParameterRanges ranges;
};

struct GeneratedScene {
  SceneSpec spec;
  std::vector<CameraParameters> variants;
  std::vector<TrueQuality> quality;
};

/// Scene specs and variant grids, deterministic under seed (no rendering).
std::vector<GeneratedScene> make_scenes(int n_scenes, int variants_per_scene, std::uint64_t seed,
                                        const GeneratorOptions& options = {});

SceneSpec random_scene(const std::string& scene_id, std::uint64_t seed,
                       const GeneratorOptions& options = {});

/// Writes images under out_dir/images and returns the manifest (with split
/// records and pairwise votes for near-tied pairs). The caller saves it.
DatasetManifest generate_dataset(int n_scenes, int variants_per_scene, int annotators,
                                 double noise_sd, std::uint64_t seed,
                                 const std::filesystem::path& out_dir,
                                 const GeneratorOptions& options = {});

}  // namespace camiqa
