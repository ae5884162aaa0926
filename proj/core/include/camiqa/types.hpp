#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace camiqa {

/// The five annotated quality attributes, in canonical order.
enum class Attribute : int { overall = 0, face, sharpness, exposure, noise };

inline constexpr std::size_t kNumAttributes = 5;
inline constexpr std::array<Attribute, kNumAttributes> kAttributes = {
    Attribute::overall, Attribute::face, Attribute::sharpness, Attribute::exposure,
    Attribute::noise};

std::string_view attribute_name(Attribute a);
Attribute attribute_from_name(std::string_view name);

/// Per-attribute values indexed by Attribute.
using AttributeArray = std::array<double, kNumAttributes>;

inline double& at(AttributeArray& a, Attribute attr) { return a[static_cast<std::size_t>(attr)]; }
inline double at(const AttributeArray& a, Attribute attr) {
  return a[static_cast<std::size_t>(attr)];
}

/// Camera parameter slots; node order of the parameter graph minus the visual node.
enum class Param : int {
  aperture = 0,
  shutter,
  iso,
  white_balance,
  contrast,
  saturation,
  sharpness
};

inline constexpr std::size_t kNumParams = 7;
inline constexpr std::array<Param, kNumParams> kParams = {
    Param::aperture, Param::shutter,    Param::iso,      Param::white_balance,
    Param::contrast, Param::saturation, Param::sharpness};

std::string_view param_name(Param p);
Param param_from_name(std::string_view name);
/// iso, shutter and white balance are normalized on a log scale.
bool param_is_log_scale(Param p);
/// Physical quantities must be strictly positive.
bool param_is_physical(Param p);

struct CameraParameters {
  double aperture = 4.0;         // f-number
  double shutter = 1.0 / 60.0;   // seconds
  double iso = 400.0;
  double white_balance = 5000.0; // Kelvin
  double contrast = 5.0;         // device scale
  double saturation = 5.0;
  double sharpness = 5.0;

  double get(Param p) const;
  void set(Param p, double v);
  std::array<double, kNumParams> values() const;
  static CameraParameters from_values(const std::array<double, kNumParams>& v);

  /// Throws DataError when a value is non-finite or a physical one is not positive.
  void validate() const;

  bool operator==(const CameraParameters&) const = default;
};

/// Pixel-coordinate box, 0 <= x0 < x1 <= width, 0 <= y0 < y1 <= height.
struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool operator==(const Box&) const = default;
};

/// RGB image with values in [0,1], stored cell-major: (height*width) x 3.
struct Image {
  int width = 0;
  int height = 0;
  Eigen::MatrixXd pixels;

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(Eigen::MatrixXd::Zero(w * h, 3)) {}

  double& at(int x, int y, int c) { return pixels(y * width + x, c); }
  double at(int x, int y, int c) const { return pixels(y * width + x, c); }
  bool operator==(const Image& o) const {
    return width == o.width && height == o.height && pixels == o.pixels;
  }
};

struct ImageSample {
  std::string image_id;
  std::string scene_id;
  Image image;
  std::vector<Box> human_boxes;
  std::optional<CameraParameters> params;

  /// Throws DataError on a box outside the image or a pixel outside [0,1].
  void validate() const;
};

struct AnnotationRecord {
  std::string annotator_id;
  std::string image_id;
  std::array<int, kNumAttributes> scores{};  // each in 1..5

  void validate() const;
  bool operator==(const AnnotationRecord&) const = default;
};

struct MOSRecord {
  std::string image_id;
  AttributeArray mos{};
  AttributeArray variance{};
  int count = 0;

  bool operator==(const MOSRecord&) const = default;
};

struct PairPreference {
  std::string scene_id;
  std::string image_p;
  std::string image_q;
  AttributeArray labels{};
  bool fine_grained = false;

  bool operator==(const PairPreference&) const = default;
};

/// One pairwise judgement psi in {0, 0.5, 1}: preference for image_p over image_q.
struct VoteRecord {
  std::string annotator_id;
  std::string image_p;
  std::string image_q;
  double value = 0.5;

  bool operator==(const VoteRecord&) const = default;
};

enum class Split { train, test };

/// Path-based sample entry of a manifest; pixels are loaded on demand.
struct SampleRecord {
  std::string image_id;
  std::string scene_id;
  std::string path;  // relative to the manifest directory
  int width = 0;
  int height = 0;
  std::vector<Box> boxes;
  std::optional<CameraParameters> params;

  bool operator==(const SampleRecord&) const = default;
};

struct DatasetManifest {
  std::vector<SampleRecord> samples;
  std::vector<AnnotationRecord> annotations;
  std::vector<VoteRecord> votes;
  std::map<std::string, Split> split;

  /// Sorted, de-duplicated scene ids of all samples.
  std::vector<std::string> scenes() const;
  const SampleRecord* find_sample(const std::string& image_id) const;

  bool operator==(const DatasetManifest&) const = default;
};

}  // namespace camiqa
