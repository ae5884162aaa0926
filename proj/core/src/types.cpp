#include "camiqa/types.hpp"

#include "camiqa/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace camiqa {

namespace {

constexpr std::array<std::string_view, kNumAttributes> kAttributeNames = {
    "overall", "face", "sharpness", "exposure", "noise"};

constexpr std::array<std::string_view, kNumParams> kParamNames = {
    "aperture", "shutter", "iso", "white_balance", "contrast", "saturation", "sharpness"};

}  // namespace

std::string_view attribute_name(Attribute a) { return kAttributeNames[static_cast<size_t>(a)]; }

Attribute attribute_from_name(std::string_view name) {
  for (size_t i = 0; i < kNumAttributes; ++i) {
    if (kAttributeNames[i] == name) return kAttributes[i];
  }
  throw DataError("unknown attribute '" + std::string(name) + "'");
}

std::string_view param_name(Param p) { return kParamNames[static_cast<size_t>(p)]; }

Param param_from_name(std::string_view name) {
  for (size_t i = 0; i < kNumParams; ++i) {
    if (kParamNames[i] == name) return kParams[i];
  }
  throw DataError("unknown camera parameter '" + std::string(name) + "'");
}

bool param_is_log_scale(Param p) {
  return p == Param::iso || p == Param::shutter || p == Param::white_balance;
}

bool param_is_physical(Param p) {
  return p == Param::aperture || p == Param::shutter || p == Param::iso ||
         p == Param::white_balance;
}

double CameraParameters::get(Param p) const {
  switch (p) {
    case Param::aperture: return aperture;
    case Param::shutter: return shutter;
    case Param::iso: return iso;
    case Param::white_balance: return white_balance;
    case Param::contrast: return contrast;
    case Param::saturation: return saturation;
    case Param::sharpness: return sharpness;
  }
  return 0.0;
}

void CameraParameters::set(Param p, double v) {
  switch (p) {
    case Param::aperture: aperture = v; break;
    case Param::shutter: shutter = v; break;
    case Param::iso: iso = v; break;
    case Param::white_balance: white_balance = v; break;
    case Param::contrast: contrast = v; break;
    case Param::saturation: saturation = v; break;
    case Param::sharpness: sharpness = v; break;
  }
}

std::array<double, kNumParams> CameraParameters::values() const {
  std::array<double, kNumParams> v{};
  for (auto p : kParams) v[static_cast<size_t>(p)] = get(p);
  return v;
}

CameraParameters CameraParameters::from_values(const std::array<double, kNumParams>& v) {
  CameraParameters c;
  for (auto p : kParams) c.set(p, v[static_cast<size_t>(p)]);
  return c;
}

void CameraParameters::validate() const {
  for (auto p : kParams) {
    const double v = get(p);
    if (!std::isfinite(v)) {
      throw DataError("camera parameter " + std::string(param_name(p)) + " is not finite");
    }
    if (param_is_physical(p) && v <= 0.0) {
      throw DataError("camera parameter " + std::string(param_name(p)) + " must be positive");
    }
  }
}

void ImageSample::validate() const {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.rows() != static_cast<Eigen::Index>(image.width) * image.height ||
      image.pixels.cols() != 3) {
    throw DataError("image " + image_id + ": inconsistent pixel buffer");
  }
  if (!image.pixels.allFinite() || image.pixels.minCoeff() < 0.0 || image.pixels.maxCoeff() > 1.0) {
    throw DataError("image " + image_id + ": pixel values must be finite and within [0,1]");
  }
  for (const auto& b : human_boxes) {
    if (!(0.0 <= b.x0 && b.x0 < b.x1 && b.x1 <= image.width && 0.0 <= b.y0 && b.y0 < b.y1 &&
          b.y1 <= image.height)) {
      throw DataError("image " + image_id + ": box outside image bounds");
    }
  }
  if (params) params->validate();
}

void AnnotationRecord::validate() const {
  for (auto a : kAttributes) {
    const int s = scores[static_cast<size_t>(a)];
    if (s < 1 || s > 5) {
      throw DataError("annotation by " + annotator_id + " on " + image_id + ": " +
                      std::string(attribute_name(a)) + " score outside 1..5");
    }
  }
}

std::vector<std::string> DatasetManifest::scenes() const {
  std::set<std::string> s;
  for (const auto& r : samples) s.insert(r.scene_id);
  return {s.begin(), s.end()};
}

const SampleRecord* DatasetManifest::find_sample(const std::string& image_id) const {
  auto it = std::find_if(samples.begin(), samples.end(),
                         [&](const SampleRecord& r) { return r.image_id == image_id; });
  return it == samples.end() ? nullptr : &*it;
}

}  // namespace camiqa
