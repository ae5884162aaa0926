#pragma once

// Five regression heads, five pairwise comparison heads and the losses.

#include "camiqa/nn.hpp"
#include "camiqa/types.hpp"

#include <array>

namespace camiqa {

inline constexpr double kProbabilityEpsilon = 1e-7;

class QualityHeads {
 public:
  QualityHeads() = default;
  /// Regression heads start with output bias `score_bias` (mid-scale).
  QualityHeads(nn::ParameterStore& store, const std::string& name, int channels, Rng& rng,
               double score_bias = 3.0);

  /// n x C features -> n x 5 raw (unclamped) scores.
  ad::Var predict(ad::Tape& tape, ad::Var features) const;
  /// Rows of a and b are paired items -> n x 5 raw probabilities
  /// sigmoid(head([a, b, a - b])), not symmetrized.
  ad::Var compare_raw(ad::Tape& tape, ad::Var a, ad::Var b) const;

  std::array<nn::Mlp, kNumAttributes> regression;
  std::array<nn::Mlp, kNumAttributes> comparison;
};

/// Inference scores, clamped to [1,5].
AttributeArray predict_attributes(const QualityHeads& heads, const Eigen::RowVectorXd& feature);

/// Symmetrized inference probability (raw(a,b) + 1 - raw(b,a)) / 2 per attribute.
AttributeArray compare_pair(const QualityHeads& heads, const Eigen::RowVectorXd& a,
                            const Eigen::RowVectorXd& b);
AttributeArray compare_pair_raw(const QualityHeads& heads, const Eigen::RowVectorXd& a,
                                const Eigen::RowVectorXd& b);

/// mean_i sum_attr exp(-v_i,attr) |pred - mos|. Inputs are n x 5.
ad::Var regression_loss(ad::Var predicted, const ad::Matrix& mos, const ad::Matrix& variance);
double regression_loss(const ad::Matrix& predicted, const ad::Matrix& mos, const ad::Matrix& variance);

/// mean_pairs sum_attr BCE(c, clamp(c_hat, eps, 1 - eps)) with soft labels.
ad::Var ranking_loss(ad::Var probabilities, const ad::Matrix& labels);
double ranking_loss(const ad::Matrix& probabilities, const ad::Matrix& labels);

struct LossWeights {
  double regression = 1.0;
  double ranking = 2.0;
};

ad::Var total_loss(ad::Var reg, ad::Var rank, const LossWeights& w = {});
double total_loss(double reg, double rank, const LossWeights& w = {});

}  // namespace camiqa
