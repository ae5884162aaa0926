#pragma once

#include "camiqa/config.hpp"
#include "camiqa/types.hpp"

#include <array>

namespace camiqa {

struct ParameterRange {
  double min = 0.0;
  double max = 1.0;
};

/// Per-parameter normalization table. Log-scale parameters (iso, shutter,
/// white balance) use min-max on log values; the rest are linear.
struct ParameterRanges {
  std::array<ParameterRange, kNumParams> ranges = {{
      {1.4, 16.0},                 // aperture, f-number
      {1.0 / 4000.0, 1.0 / 15.0},  // shutter, seconds
      {100.0, 6400.0},             // iso
      {2800.0, 8000.0},            // white balance, Kelvin
      {0.0, 10.0},                 // contrast
      {0.0, 10.0},                 // saturation
      {0.0, 10.0},                 // sharpness
  }};

  const ParameterRange& operator[](Param p) const { return ranges[static_cast<size_t>(p)]; }
  ParameterRange& operator[](Param p) { return ranges[static_cast<size_t>(p)]; }

  /// Reads "range.<name>.min" / "range.<name>.max" keys; missing keys keep defaults.
  static ParameterRanges from_config(const KeyValueConfig& cfg);
  void write_to(KeyValueConfig& cfg) const;

  void validate() const;
  bool operator==(const ParameterRanges& o) const;
};

/// Unclamped normalized coordinate of one parameter value.
double normalize_value(Param p, double value, const ParameterRanges& ranges);
/// Inverse of normalize_value.
double denormalize_value(Param p, double unit, const ParameterRanges& ranges);

/// 7-vector in [0,1]; throws DataError for non-positive physical values.
std::array<double, kNumParams> normalize_params(const CameraParameters& p,
                                                const ParameterRanges& ranges);

}  // namespace camiqa
