#include "camiqa/parameters.hpp"

#include "camiqa/error.hpp"

#include <algorithm>
#include <cmath>

namespace camiqa {

ParameterRanges ParameterRanges::from_config(const KeyValueConfig& cfg) {
  ParameterRanges r;
  for (auto p : kParams) {
    const std::string base = "range." + std::string(param_name(p));
    r[p].min = cfg.get_double(base + ".min", r[p].min);
    r[p].max = cfg.get_double(base + ".max", r[p].max);
  }
  r.validate();
  return r;
}

void ParameterRanges::write_to(KeyValueConfig& cfg) const {
  for (auto p : kParams) {
    const std::string base = "range." + std::string(param_name(p));
    cfg.set(base + ".min", format_double((*this)[p].min));
    cfg.set(base + ".max", format_double((*this)[p].max));
  }
}

void ParameterRanges::validate() const {
  for (auto p : kParams) {
    const auto& r = (*this)[p];
    if (!(std::isfinite(r.min) && std::isfinite(r.max) && r.min < r.max)) {
      throw UsageError("range for " + std::string(param_name(p)) + " must satisfy min < max");
    }
    if (param_is_log_scale(p) && r.min <= 0.0) {
      throw UsageError("log-scale range for " + std::string(param_name(p)) + " must be positive");
    }
  }
}

bool ParameterRanges::operator==(const ParameterRanges& o) const {
  for (size_t i = 0; i < kNumParams; ++i) {
    if (ranges[i].min != o.ranges[i].min || ranges[i].max != o.ranges[i].max) return false;
  }
  return true;
}

double normalize_value(Param p, double value, const ParameterRanges& ranges) {
  const auto& r = ranges[p];
  if (param_is_log_scale(p)) {
    if (value <= 0.0) {
      throw DataError("non-positive value for log-scale parameter " + std::string(param_name(p)));
    }
    return (std::log(value) - std::log(r.min)) / (std::log(r.max) - std::log(r.min));
  }
  return (value - r.min) / (r.max - r.min);
}

double denormalize_value(Param p, double unit, const ParameterRanges& ranges) {
  const auto& r = ranges[p];
  if (param_is_log_scale(p)) {
    return std::exp(std::log(r.min) + unit * (std::log(r.max) - std::log(r.min)));
  }
  return r.min + unit * (r.max - r.min);
}

std::array<double, kNumParams> normalize_params(const CameraParameters& p,
                                                const ParameterRanges& ranges) {
  for (auto k : kParams) {
    if (param_is_physical(k) && !(p.get(k) > 0.0)) {
      throw DataError("camera parameter " + std::string(param_name(k)) + " must be positive");
    }
  }
  std::array<double, kNumParams> out{};
  for (auto k : kParams) {
    out[static_cast<size_t>(k)] = std::clamp(normalize_value(k, p.get(k), ranges), 0.0, 1.0);
  }
  return out;
}

}  // namespace camiqa
