#pragma once

#include "camiqa/autodiff.hpp"
#include "camiqa/random.hpp"

#include <deque>
#include <map>
#include <string>
#include <vector>

namespace camiqa::nn {

using ad::Matrix;
using ad::Parameter;
using ad::Tape;
using ad::Var;

/// Owns every trainable tensor of a model. Addresses are stable.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Matrix value);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }

  void zero_grad();
  size_t scalar_count() const;

 private:
  std::deque<Parameter> params_;
  std::map<std::string, size_t> index_;
};

Matrix he_normal(Eigen::Index rows, Eigen::Index cols, double fan_in, Rng& rng);
Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// y = x W + b, x is (n x in). Without bias, bias stays null.
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out,
         Rng& rng, bool he = true, bool with_bias = true);

  Var operator()(Tape& tape, Var x) const;

  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
};

/// Square-kernel convolution over a cell-major feature map.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParameterStore& store, const std::string& name, Eigen::Index in_channels,
         Eigen::Index out_channels, int kernel, Rng& rng);

  Var operator()(Tape& tape, Var x, const ad::ConvGeometry& g) const;

  int kernel = 3;
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
};

/// Two-layer perceptron in -> hidden -> out with a rectifier in between.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index hidden,
      Eigen::Index out, Rng& rng);

  Var operator()(Tape& tape, Var x) const;

  Linear first;
  Linear second;
};

}  // namespace camiqa::nn
