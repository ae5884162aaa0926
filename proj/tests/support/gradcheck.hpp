#pragma once

// Central finite-difference check of reverse-mode gradients.

#include <camiqa/autodiff.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace camiqa::testing {

struct GradCheckResult {
  double worst_relative_error = 0.0;
  std::string worst_tensor;
};

/// `loss` builds a scalar on the given tape from the listed parameters.
/// Relative error per tensor: ||analytic - numeric|| / max(||analytic|| + ||numeric||, floor).
inline GradCheckResult check_gradients(const std::vector<ad::Parameter*>& params,
                                       const std::function<ad::Var(ad::Tape&)>& loss,
                                       double h = 1e-6, double floor = 1e-10) {
  for (auto* p : params) p->zero_grad();
  {
    ad::Tape tape;
    ad::Var l = loss(tape);
    tape.backward(l);
  }
  const auto eval = [&] {
    ad::Tape tape(false);
    return loss(tape).scalar();
  };
  GradCheckResult res;
  for (auto* p : params) {
    ad::Matrix numeric(p->value.rows(), p->value.cols());
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double orig = p->value.data()[i];
      p->value.data()[i] = orig + h;
      const double up = eval();
      p->value.data()[i] = orig - h;
      const double down = eval();
      p->value.data()[i] = orig;
      numeric.data()[i] = (up - down) / (2.0 * h);
    }
    const double denom = std::max(p->grad.norm() + numeric.norm(), floor);
    const double rel = (p->grad - numeric).norm() / denom;
    if (res.worst_tensor.empty() || rel > res.worst_relative_error) {
      res.worst_relative_error = rel;
      res.worst_tensor = p->name();
    }
  }
  return res;
}

}  // namespace camiqa::testing
