#include <camiqa/autodiff.hpp>
#include <camiqa/random.hpp>

#include "gradcheck.hpp"

#include <gtest/gtest.h>

#include <random>

namespace camiqa {
namespace {

using ad::Matrix;
using ad::Parameter;
using ad::Tape;
using ad::Var;

Matrix randn(Eigen::Index r, Eigen::Index c, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Weighted sum so every output entry gets a distinct upstream gradient.
Var project(Tape& t, Var y, const Matrix& w) { return ad::sum(ad::mul(y, t.constant(w))); }

class OpGrad : public ::testing::Test {
 protected:
  Rng rng{17};
  static constexpr double kTol = 1e-6;
};

TEST_F(OpGrad, MatmulTransposeAdd) {
  Parameter a("a", randn(3, 4, rng)), b("b", randn(4, 2, rng)), c("c", randn(2, 3, rng));
  const Matrix w = randn(3, 2, rng);
  auto r = testing::check_gradients({&a, &b, &c}, [&](Tape& t) {
    Var ab = ad::matmul(t.param(a), t.param(b));
    return project(t, ad::mul(ad::sub(ad::add(ab, ad::transpose(t.param(c))), ab), ab), w);
  });
  EXPECT_LT(r.worst_relative_error, kTol) << r.worst_tensor;
}

TEST_F(OpGrad, ElementwiseChain) {
  Parameter a("a", randn(4, 3, rng)), b("b", randn(4, 3, rng));
  const Matrix w = randn(4, 3, rng);
  auto r = testing::check_gradients({&a, &b}, [&](Tape& t) {
    Var x = ad::mul(t.param(a), t.param(b));
    x = ad::add(ad::elu(x), ad::leaky_relu(t.param(a), 0.2));
    x = ad::add(ad::sigmoid(x), ad::scale(ad::exp(ad::scale(t.param(b), 0.3)), 0.5));
    x = ad::add_scalar(ad::log(ad::add_scalar(ad::abs(x), 0.5)), 1.0);
    return project(t, ad::relu(ad::add_scalar(x, 2.0)), w);
  });
  EXPECT_LT(r.worst_relative_error, kTol) << r.worst_tensor;
}

TEST_F(OpGrad, RowBroadcastsAndReductions) {
  Parameter a("a", randn(5, 3, rng)), row("row", randn(1, 3, rng)), u("u", randn(4, 1, rng)),
      v("v", randn(4, 1, rng));
  Eigen::VectorXd s(5);
  s << 0.5, -1.0, 2.0, 0.1, 3.0;
  const Matrix w = randn(5, 3, rng), w2 = randn(4, 4, rng);
  auto r = testing::check_gradients({&a, &row, &u, &v}, [&](Tape& t) {
    Var x = ad::scale_rows(ad::add_row(t.param(a), t.param(row)), s);
    Var y = ad::add(x, ad::broadcast_rows(ad::mean_rows(t.param(a)), 5));
    Var o = ad::outer_sum(t.param(u), t.param(v));
    return ad::add(ad::add(project(t, y, w), project(t, o, w2)), ad::mean(x));
  });
  EXPECT_LT(r.worst_relative_error, kTol) << r.worst_tensor;
}

TEST_F(OpGrad, Structural) {
  Parameter a("a", randn(4, 2, rng)), b("b", randn(4, 3, rng)), c("c", randn(2, 5, rng));
  const Matrix w = randn(6, 5, rng), w2 = randn(3, 2, rng);
  const std::vector<int> idx = {3, 0, 3};
  auto r = testing::check_gradients({&a, &b, &c}, [&](Tape& t) {
    const std::array<Var, 2> cols{t.param(a), t.param(b)};
    Var ab = ad::concat_cols(cols);
    const std::array<Var, 2> rows{ab, t.param(c)};
    Var all = ad::concat_rows(rows);
    Var g = ad::gather_rows(ad::slice_cols(ab, 1, 2), idx);
    return ad::add(project(t, all, w), project(t, g, w2));
  });
  EXPECT_LT(r.worst_relative_error, kTol) << r.worst_tensor;
}

TEST_F(OpGrad, ScatterInvertsGather) {
  Parameter a("a", randn(6, 2, rng));
  const std::vector<std::vector<int>> parts = {{0, 4}, {1, 2, 5}, {3}};
  Tape t;
  std::vector<Var> pieces;
  for (const auto& p : parts) pieces.push_back(ad::gather_rows(t.param(a), p));
  EXPECT_EQ(ad::scatter_rows(pieces, parts, 6).value(), a.value);
  const Matrix w = randn(6, 2, rng);
  auto r = testing::check_gradients({&a}, [&](Tape& tt) {
    std::vector<Var> ps;
    for (const auto& p : parts) ps.push_back(ad::scale(ad::gather_rows(tt.param(a), p), 2.0));
    return project(tt, ad::scatter_rows(ps, parts, 6), w);
  });
  EXPECT_LT(r.worst_relative_error, kTol) << r.worst_tensor;
}

TEST_F(OpGrad, Softmaxes) {
  Parameter a("a", randn(4, 4, rng));
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask(4, 4);
  mask << 1, 0, 1, 0, 1, 1, 1, 1, 0, 0, 1, 0, 0, 1, 0, 1;
  const Matrix w = randn(4, 4, rng);
  auto r = testing::check_gradients({&a}, [&](Tape& t) {
    return ad::add(project(t, ad::softmax_rows(t.param(a)), w),
                   project(t, ad::masked_softmax_rows(t.param(a), mask), w));
  });
  EXPECT_LT(r.worst_relative_error, kTol) << r.worst_tensor;
}

TEST(Softmax, MaskedRowsSumToOneAndZeroOutside) {
  Rng rng(3);
  Tape t(false);
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask(3, 3);
  mask << 1, 0, 1, 0, 1, 0, 1, 1, 1;
  const Matrix y = ad::masked_softmax_rows(t.constant(randn(3, 3, rng, 10.0)), mask).value();
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(y.row(i).sum(), 1.0, 1e-12);
    for (int j = 0; j < 3; ++j) {
      if (!mask(i, j)) EXPECT_EQ(y(i, j), 0.0);
    }
  }
}

TEST_F(OpGrad, Conv2dStridesAndPadding) {
  for (auto [h, w, k, s] : {std::array{5, 6, 3, 1}, std::array{7, 5, 3, 2}, std::array{8, 8, 4, 4},
                            std::array{1, 4, 3, 1}}) {
    const auto g = ad::ConvGeometry::same_ceil(h, w, k, s);
    EXPECT_EQ(g.out_h, (h + s - 1) / s);
    EXPECT_EQ(g.out_w, (w + s - 1) / s);
    Parameter x("x", randn(h * w, 2, rng)), wt("w", randn(k * k * 2, 3, rng)),
        b("b", randn(1, 3, rng));
    const Matrix proj = randn(g.out_h * g.out_w, 3, rng);
    auto r = testing::check_gradients({&x, &wt, &b}, [&](Tape& t) {
      return project(t, ad::conv2d(t.param(x), t.param(wt), t.param(b), g), proj);
    });
    EXPECT_LT(r.worst_relative_error, kTol) << r.worst_tensor << " " << h << "x" << w;
  }
}

TEST(Conv2d, MatchesDirectLoop) {
  Rng rng(5);
  const int h = 5, w = 4, cin = 2, cout = 3, k = 3;
  const auto g = ad::ConvGeometry::same_ceil(h, w, k, 2);
  const Matrix x = randn(h * w, cin, rng), wt = randn(k * k * cin, cout, rng), b = randn(1, cout, rng);
  Tape t(false);
  const Matrix y = ad::conv2d(t.constant(x), t.constant(wt), t.constant(b), g).value();
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      for (int co = 0; co < cout; ++co) {
        double acc = b(0, co);
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const int iy = oy * 2 - g.pad_y + ky, ix = ox * 2 - g.pad_x + kx;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
            for (int ci = 0; ci < cin; ++ci) {
              acc += x(iy * w + ix, ci) * wt((ky * k + kx) * cin + ci, co);
            }
          }
        }
        EXPECT_NEAR(y(oy * g.out_w + ox, co), acc, 1e-12);
      }
    }
  }
}

TEST_F(OpGrad, RoiAlign) {
  Parameter x("x", randn(5 * 6, 3, rng));
  const std::vector<ad::GridBox> boxes = {{0.3, 0.7, 4.2, 3.9}, {2.0, 1.0, 6.0, 5.0}};
  const Matrix w = randn(1, 3, rng);
  auto r = testing::check_gradients({&x}, [&](Tape& t) {
    return project(t, ad::roi_align_mean(t.param(x), 5, 6, boxes, 3), w);
  });
  EXPECT_LT(r.worst_relative_error, kTol) << r.worst_tensor;
}

TEST(RoiAlign, ConstantMapGivesConstant) {
  Matrix x(4 * 4, 2);
  x.col(0).setConstant(1.5);
  x.col(1).setConstant(-2.0);
  Tape t(false);
  const std::vector<ad::GridBox> boxes = {{0, 0, 4, 4}, {1.2, 0.1, 2.9, 3.3}};
  const Matrix y = ad::roi_align_mean(t.constant(x), 4, 4, boxes).value();
  EXPECT_NEAR(y(0, 0), 1.5, 1e-12);
  EXPECT_NEAR(y(0, 1), -2.0, 1e-12);
}

TEST(RoiAlign, BinCentresOnCellCentresReadCells) {
  // A 3x3 box aligned to the grid puts each bin centre at a cell centre.
  Matrix x(3 * 3, 1);
  for (int i = 0; i < 9; ++i) x(i, 0) = i * i;
  Tape t(false);
  const std::vector<ad::GridBox> boxes = {{0, 0, 3, 3}};
  EXPECT_NEAR(ad::roi_align_mean(t.constant(x), 3, 3, boxes).scalar(), x.mean(), 1e-12);
}

TEST(Tape, InferenceTapeRecordsNoGradient) {
  Parameter a("a", Matrix::Ones(2, 2));
  a.zero_grad();
  Tape t(false);
  Var y = ad::sum(ad::mul(t.param(a), t.param(a)));
  EXPECT_DOUBLE_EQ(y.scalar(), 4.0);
  EXPECT_FALSE(t.needs_grad(y.id()));
}

TEST(Tape, SeedScalesParameterGradient) {
  Parameter a("a", Matrix::Constant(1, 1, 3.0));
  a.zero_grad();
  Tape t;
  t.backward(ad::mul(t.param(a), t.param(a)), 0.25);
  EXPECT_DOUBLE_EQ(a.grad(0, 0), 1.5);
}

}  // namespace
}  // namespace camiqa
