#pragma once

#include "camiqa/types.hpp"

#include <cstdint>
#include <filesystem>

namespace camiqa {

/// Reads a line-delimited manifest (one JSON object per line, record kinds
/// "sample", "annotation", "vote", "split"). Validates cross references.
/// Errors carry the 1-based line number of the offending record.
DatasetManifest load_manifest(const std::filesystem::path& path);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Checks every data-model invariant of an in-memory manifest. Boxes that are
/// empty after clipping to the image are removed (with a warning on stderr).
void validate_manifest(DatasetManifest& manifest);

/// Assigns every scene to train or test; round(fraction * scenes) train scenes,
/// at least one scene on each side.
DatasetManifest split_scenes(const DatasetManifest& manifest, double train_fraction,
                             std::uint64_t seed);

/// Loads the pixels of one manifest entry. Image paths resolve against `root`.
ImageSample load_sample(const std::filesystem::path& root, const SampleRecord& record);

}  // namespace camiqa
