#pragma once

#include "camiqa/types.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace camiqa {

/// Per-attribute arithmetic mean and population variance of one image's scores.
MOSRecord compute_mos(std::span<const AnnotationRecord> annotations);

struct ScreeningReport {
  std::string annotator_id;
  std::optional<double> plcc_to_mos;  // empty when undefined (zero variance)
  bool retained = false;

  bool operator==(const ScreeningReport&) const = default;
};

struct ScreeningResult {
  std::vector<ScreeningReport> reports;  // sorted by annotator id
  std::vector<AnnotationRecord> retained;
};

/// Correlates each annotator's overall scores with the provisional MOS of all
/// annotators and drops those below `threshold` or with undefined correlation.
ScreeningResult screen_annotators(std::span<const AnnotationRecord> all, double threshold = 0.75);

/// All unordered pairs (in input order) with indicator labels per attribute
/// (0.5 on ties); fine_grained iff the overall MOS gap is <= fine_threshold.
std::vector<PairPreference> build_scene_pairs(std::span<const MOSRecord> scene_images,
                                              const std::string& scene_id,
                                              double fine_threshold = 0.8);

/// Replaces the overall label of a fine-grained pair by the mean vote.
/// Throws UsageError on a coarse pair and DataError on an invalid vote.
PairPreference refine_preference(const PairPreference& pair, std::span<const double> votes);

struct AnnotationOutput {
  std::vector<MOSRecord> mos;           // manifest sample order
  std::vector<PairPreference> pairs;    // scene order, then input order
  std::vector<ScreeningReport> screening;
  size_t fine_grained_pairs = 0;
  size_t refined_pairs = 0;

  double fine_grained_fraction() const {
    return pairs.empty() ? 0.0 : static_cast<double>(fine_grained_pairs) / pairs.size();
  }
};

struct AnnotationOptions {
  double screening_threshold = 0.75;
  double fine_threshold = 0.8;
};

/// Screening, MOS, pair construction and vote refinement over a manifest.
/// Fine-grained pairs without any vote keep their MOS-derived labels.
AnnotationOutput annotation_pipeline(const DatasetManifest& manifest,
                                     const AnnotationOptions& options = {});

// Line-delimited record files produced by the annotate command.
void save_mos(const std::filesystem::path& path, std::span<const MOSRecord> records);
std::vector<MOSRecord> load_mos(const std::filesystem::path& path);
void save_pairs(const std::filesystem::path& path, std::span<const PairPreference> pairs);
std::vector<PairPreference> load_pairs(const std::filesystem::path& path);
void save_screening(const std::filesystem::path& path, std::span<const ScreeningReport> reports);

}  // namespace camiqa
