#include "camiqa/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace camiqa::nn {

Parameter& ParameterStore::add(const std::string& name, Matrix value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  index_[name] = params_.size();
  return params_.emplace_back(name, std::move(value));
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return params_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return params_[it->second];
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

size_t ParameterStore::scalar_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p.value.size());
  return n;
}

Matrix he_normal(Eigen::Index rows, Eigen::Index cols, double fan_in, Rng& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

Linear::Linear(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out,
               Rng& rng, bool he, bool with_bias)
    : weight(&store.add(name + ".weight", he ? he_normal(in, out, static_cast<double>(in), rng)
                                             : xavier_uniform(in, out, rng))),
      bias(with_bias ? &store.add(name + ".bias", Matrix::Zero(1, out)) : nullptr) {}

Var Linear::operator()(Tape& tape, Var x) const {
  Var y = ad::matmul(x, tape.param(*weight));
  return bias ? ad::add_row(y, tape.param(*bias)) : y;
}

Conv2d::Conv2d(ParameterStore& store, const std::string& name, Eigen::Index in_channels,
               Eigen::Index out_channels, int k, Rng& rng)
    : kernel(k),
      weight(&store.add(name + ".weight",
                        he_normal(static_cast<Eigen::Index>(k) * k * in_channels, out_channels,
                                  static_cast<double>(k * k) * static_cast<double>(in_channels),
                                  rng))),
      bias(&store.add(name + ".bias", Matrix::Zero(1, out_channels))) {}

Var Conv2d::operator()(Tape& tape, Var x, const ad::ConvGeometry& g) const {
  return ad::conv2d(x, tape.param(*weight), tape.param(*bias), g);
}

Mlp::Mlp(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index hidden,
         Eigen::Index out, Rng& rng)
    : first(store, name + ".fc1", in, hidden, rng),
      second(store, name + ".fc2", hidden, out, rng, false) {}

Var Mlp::operator()(Tape& tape, Var x) const { return second(tape, ad::relu(first(tape, x))); }

}  // namespace camiqa::nn
