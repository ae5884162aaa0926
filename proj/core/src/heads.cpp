#include "camiqa/heads.hpp"

#include "camiqa/error.hpp"

#include <algorithm>
#include <cmath>

namespace camiqa {

using ad::Matrix;
using ad::Var;

QualityHeads::QualityHeads(nn::ParameterStore& store, const std::string& name, int channels, Rng& rng,
                           double score_bias) {
  for (auto a : kAttributes) {
    const std::string attr(attribute_name(a));
    const auto i = static_cast<size_t>(a);
    regression[i] = nn::Mlp(store, name + ".score." + attr, channels, channels / 2, 1, rng);
    regression[i].second.bias->value.setConstant(score_bias);
    comparison[i] = nn::Mlp(store, name + ".compare." + attr, 3 * channels, channels / 2, 1, rng);
  }
}

Var QualityHeads::predict(ad::Tape& tape, Var features) const {
  std::array<Var, kNumAttributes> cols;
  for (size_t i = 0; i < kNumAttributes; ++i) cols[i] = regression[i](tape, features);
  return ad::concat_cols(cols);
}

Var QualityHeads::compare_raw(ad::Tape& tape, Var a, Var b) const {
  const std::array<Var, 3> parts{a, b, ad::sub(a, b)};
  Var joint = ad::concat_cols(parts);
  std::array<Var, kNumAttributes> cols;
  for (size_t i = 0; i < kNumAttributes; ++i) cols[i] = ad::sigmoid(comparison[i](tape, joint));
  return ad::concat_cols(cols);
}

AttributeArray predict_attributes(const QualityHeads& heads, const Eigen::RowVectorXd& feature) {
  ad::Tape tape(false);
  const Matrix out = heads.predict(tape, tape.constant(feature)).value();
  AttributeArray s{};
  for (size_t i = 0; i < kNumAttributes; ++i) s[i] = std::clamp(out(0, static_cast<Eigen::Index>(i)), 1.0, 5.0);
  return s;
}

AttributeArray compare_pair_raw(const QualityHeads& heads, const Eigen::RowVectorXd& a,
                                const Eigen::RowVectorXd& b) {
  if (a.size() != b.size()) throw DataError("compare_pair: feature lengths differ");
  ad::Tape tape(false);
  const Matrix out = heads.compare_raw(tape, tape.constant(a), tape.constant(b)).value();
  AttributeArray c{};
  for (size_t i = 0; i < kNumAttributes; ++i) c[i] = out(0, static_cast<Eigen::Index>(i));
  return c;
}

AttributeArray compare_pair(const QualityHeads& heads, const Eigen::RowVectorXd& a,
                            const Eigen::RowVectorXd& b) {
  const auto ab = compare_pair_raw(heads, a, b);
  const auto ba = compare_pair_raw(heads, b, a);
  AttributeArray c{};
  for (size_t i = 0; i < kNumAttributes; ++i) c[i] = (ab[i] + 1.0 - ba[i]) / 2.0;
  return c;
}

namespace {

void check_batch(Eigen::Index rows, Eigen::Index cols, const Matrix& target, const char* what) {
  if (rows == 0) throw DataError(std::string(what) + ": empty batch");
  if (cols != static_cast<Eigen::Index>(kNumAttributes) || target.rows() != rows ||
      target.cols() != cols) {
    throw DataError(std::string(what) + ": shape mismatch");
  }
}

}  // namespace

Var regression_loss(Var predicted, const Matrix& mos, const Matrix& variance) {
  check_batch(predicted.rows(), predicted.cols(), mos, "regression_loss");
  check_batch(predicted.rows(), predicted.cols(), variance, "regression_loss");
  ad::Tape& tape = *predicted.tape();
  Var err = ad::abs(ad::sub(predicted, tape.constant(mos)));
  Var weighted = ad::mul(err, tape.constant((-variance.array()).exp().matrix()));
  return ad::scale(ad::sum(weighted), 1.0 / static_cast<double>(predicted.rows()));
}

double regression_loss(const Matrix& predicted, const Matrix& mos, const Matrix& variance) {
  check_batch(predicted.rows(), predicted.cols(), mos, "regression_loss");
  check_batch(predicted.rows(), predicted.cols(), variance, "regression_loss");
  return ((predicted - mos).array().abs() * (-variance.array()).exp()).sum() /
         static_cast<double>(predicted.rows());
}

static void check_labels(const Matrix& labels) {
  if ((labels.array() < 0.0).any() || (labels.array() > 1.0).any()) {
    throw DataError("ranking_loss: labels must lie in [0,1]");
  }
}

Var ranking_loss(Var probabilities, const Matrix& labels) {
  check_batch(probabilities.rows(), probabilities.cols(), labels, "ranking_loss");
  check_labels(labels);
  ad::Tape& tape = *probabilities.tape();
  Var c = ad::clamp(probabilities, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  Var pos = ad::mul(tape.constant(labels), ad::log(c));
  Var neg = ad::mul(tape.constant((1.0 - labels.array()).matrix()),
                    ad::log(ad::add_scalar(ad::scale(c, -1.0), 1.0)));
  return ad::scale(ad::sum(ad::add(pos, neg)), -1.0 / static_cast<double>(probabilities.rows()));
}

double ranking_loss(const Matrix& probabilities, const Matrix& labels) {
  check_batch(probabilities.rows(), probabilities.cols(), labels, "ranking_loss");
  check_labels(labels);
  const auto c = probabilities.array().cwiseMax(kProbabilityEpsilon).cwiseMin(1.0 - kProbabilityEpsilon);
  const auto l = labels.array();
  return -(l * c.log() + (1.0 - l) * (1.0 - c).log()).sum() /
         static_cast<double>(probabilities.rows());
}

Var total_loss(Var reg, Var rank, const LossWeights& w) {
  return ad::add(ad::scale(reg, w.regression), ad::scale(rank, w.ranking));
}

double total_loss(double reg, double rank, const LossWeights& w) {
  return w.regression * reg + w.ranking * rank;
}

}  // namespace camiqa
