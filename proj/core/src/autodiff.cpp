#include "camiqa/autodiff.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace camiqa::ad {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Tape& tape_of(Var a) {
  assert(a.valid());
  return *a.tape();
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

Parameter::Parameter(std::string name, Matrix v)
    : value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())), name_(std::move(name)) {}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, &p, record_});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::push(Matrix value, std::initializer_list<Var> parents, Backward backward) {
  return push(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
              std::move(backward));
}

Var Tape::push(Matrix value, std::span<const Var> parents, Backward backward) {
  bool needs = false;
  if (record_) {
    for (const auto& p : parents) needs = needs || needs_grad(p.id());
  }
  Node node{std::move(value), {}, {}, nullptr, needs};
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Matrix& g) { accumulate_expr(id, g); }

void Tape::backward(Var root, double seed) {
  require(root.tape() == this, "backward: root from another tape");
  require(root.rows() == 1 && root.cols() == 1, "backward: root must be a scalar");
  if (!needs_grad(root.id())) return;
  nodes_[static_cast<size_t>(root.id())].grad = Matrix::Constant(1, 1, seed);
  for (int i = root.id(); i >= 0; --i) {
    auto& node = nodes_[static_cast<size_t>(i)];
    if (node.grad.size() == 0) continue;
    if (node.param != nullptr) {
      node.param->grad += node.grad;
    } else if (node.backward) {
      node.backward(node.grad, *this);
    }
  }
}

Matrix Tape::grad(Var v) const {
  const auto& node = nodes_[static_cast<size_t>(v.id())];
  if (node.grad.size() == 0) return Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

// --- elementwise and linear algebra -------------------------------------

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  auto& t = tape_of(a);
  return t.push(a.value() * b.value(), {a, b}, [a, b](const Matrix& g, Tape& tp) {
    if (tp.needs_grad(a.id())) tp.accumulate_expr(a.id(), g * b.value().transpose());
    if (tp.needs_grad(b.id())) tp.accumulate_expr(b.id(), a.value().transpose() * g);
  });
}

Var transpose(Var a) {
  return tape_of(a).push(a.value().transpose(), {a}, [a](const Matrix& g, Tape& tp) {
    tp.accumulate_expr(a.id(), g.transpose());
  });
}

Var add(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  return tape_of(a).push(a.value() + b.value(), {a, b}, [a, b](const Matrix& g, Tape& tp) {
    tp.accumulate(a.id(), g);
    tp.accumulate(b.id(), g);
  });
}

Var sub(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  return tape_of(a).push(a.value() - b.value(), {a, b}, [a, b](const Matrix& g, Tape& tp) {
    tp.accumulate(a.id(), g);
    tp.accumulate_expr(b.id(), -g);
  });
}

Var mul(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shape mismatch");
  return tape_of(a).push(a.value().cwiseProduct(b.value()), {a, b},
                         [a, b](const Matrix& g, Tape& tp) {
                           tp.accumulate_expr(a.id(), g.cwiseProduct(b.value()));
                           tp.accumulate_expr(b.id(), g.cwiseProduct(a.value()));
                         });
}

Var scale(Var a, double s) {
  return tape_of(a).push(a.value() * s, {a},
                         [a, s](const Matrix& g, Tape& tp) { tp.accumulate_expr(a.id(), g * s); });
}

Var add_scalar(Var a, double s) {
  return tape_of(a).push((a.value().array() + s).matrix(), {a},
                         [a](const Matrix& g, Tape& tp) { tp.accumulate(a.id(), g); });
}

Var add_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row: bias shape mismatch");
  Matrix out = a.value().rowwise() + row.value().row(0);
  return tape_of(a).push(std::move(out), {a, row}, [a, row](const Matrix& g, Tape& tp) {
    tp.accumulate(a.id(), g);
    tp.accumulate_expr(row.id(), g.colwise().sum());
  });
}

Var scale_rows(Var a, const Eigen::VectorXd& s) {
  require(s.size() == a.rows(), "scale_rows: length mismatch");
  Matrix out = s.asDiagonal() * a.value();
  return tape_of(a).push(std::move(out), {a}, [a, s](const Matrix& g, Tape& tp) {
    tp.accumulate_expr(a.id(), s.asDiagonal() * g);
  });
}

Var broadcast_rows(Var row, Eigen::Index n) {
  require(row.rows() == 1, "broadcast_rows: expects a row");
  Matrix out = row.value().replicate(n, 1);
  return tape_of(row).push(std::move(out), {row}, [row](const Matrix& g, Tape& tp) {
    tp.accumulate_expr(row.id(), g.colwise().sum());
  });
}

Var outer_sum(Var a, Var b) {
  require(a.cols() == 1 && b.cols() == 1, "outer_sum: expects column vectors");
  const auto n = a.rows();
  const auto m = b.rows();
  Matrix out = a.value().replicate(1, m) + b.value().transpose().replicate(n, 1);
  return tape_of(a).push(std::move(out), {a, b}, [a, b](const Matrix& g, Tape& tp) {
    tp.accumulate_expr(a.id(), g.rowwise().sum());
    tp.accumulate_expr(b.id(), g.colwise().sum().transpose());
  });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  return tape_of(a).push(std::move(out), {a}, [a](const Matrix& g, Tape& tp) {
    tp.accumulate_expr(a.id(), (a.value().array() > 0.0).select(g.array(), 0.0).matrix());
  });
}

Var leaky_relu(Var a, double slope) {
  Matrix out = (a.value().array() > 0.0).select(a.value().array(), slope * a.value().array());
  return tape_of(a).push(std::move(out), {a}, [a, slope](const Matrix& g, Tape& tp) {
    tp.accumulate_expr(a.id(),
                       (a.value().array() > 0.0).select(g.array(), slope * g.array()).matrix());
  });
}

Var elu(Var a) {
  Matrix out = (a.value().array() > 0.0).select(a.value().array(), a.value().array().exp() - 1.0);
  return tape_of(a).push(std::move(out), {a}, [a](const Matrix& g, Tape& tp) {
    tp.accumulate_expr(
        a.id(),
        (a.value().array() > 0.0).select(g.array(), g.array() * a.value().array().exp()).matrix());
  });
}

Var sigmoid(Var a) {
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return tape_of(a).push(out, {a}, [a, out](const Matrix& g, Tape& tp) {
    tp.accumulate_expr(a.id(), (g.array() * out.array() * (1.0 - out.array())).matrix());
  });
}

Var exp(Var a) {
  Matrix out = a.value().array().exp().matrix();
  return tape_of(a).push(out, {a}, [a, out](const Matrix& g, Tape& tp) {
    tp.accumulate_expr(a.id(), g.cwiseProduct(out));
  });
}

Var log(Var a) {
  Matrix out = a.value().array().log().matrix();
  return tape_of(a).push(std::move(out), {a}, [a](const Matrix& g, Tape& tp) {
    tp.accumulate_expr(a.id(), g.cwiseQuotient(a.value()));
  });
}

Var abs(Var a) {
  return tape_of(a).push(a.value().cwiseAbs(), {a}, [a](const Matrix& g, Tape& tp) {
    tp.accumulate_expr(a.id(), g.cwiseProduct(a.value().unaryExpr([](double v) {
      return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    })));
  });
}

Var clamp(Var a, double lo, double hi) {
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return tape_of(a).push(std::move(out), {a}, [a, lo, hi](const Matrix& g, Tape& tp) {
    const auto& x = a.value().array();
    tp.accumulate_expr(a.id(), ((x > lo) && (x < hi)).select(g.array(), 0.0).matrix());
  });
}

Var sum(Var a) {
  return tape_of(a).push(Matrix::Constant(1, 1, a.value().sum()), {a},
                         [a](const Matrix& g, Tape& tp) {
                           tp.accumulate_expr(a.id(),
                                              Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
                         });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return tape_of(a).push(Matrix::Constant(1, 1, a.value().mean()), {a},
                         [a, n](const Matrix& g, Tape& tp) {
                           tp.accumulate_expr(a.id(),
                                              Matrix::Constant(a.rows(), a.cols(), g(0, 0) / n));
                         });
}

Var mean_rows(Var a) {
  const auto n = a.rows();
  return tape_of(a).push(a.value().colwise().mean(), {a}, [a, n](const Matrix& g, Tape& tp) {
    tp.accumulate_expr(a.id(), (g / static_cast<double>(n)).replicate(n, 1));
  });
}

// --- structural --------------------------------------------------------

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const auto rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return tape_of(parts.front())
      .push(std::move(out), parts, [saved](const Matrix& g, Tape& tp) {
        Eigen::Index o = 0;
        for (const auto& p : saved) {
          tp.accumulate_expr(p.id(), g.middleCols(o, p.cols()));
          o += p.cols();
        }
      });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const auto cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return tape_of(parts.front())
      .push(std::move(out), parts, [saved](const Matrix& g, Tape& tp) {
        Eigen::Index o = 0;
        for (const auto& p : saved) {
          tp.accumulate_expr(p.id(), g.middleRows(o, p.rows()));
          o += p.rows();
        }
      });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && start + count <= a.cols(), "slice_cols: out of range");
  return tape_of(a).push(a.value().middleCols(start, count), {a},
                         [a, start, count](const Matrix& g, Tape& tp) {
                           Matrix full = Matrix::Zero(a.rows(), a.cols());
                           full.middleCols(start, count) = g;
                           tp.accumulate(a.id(), full);
                         });
}

Var gather_rows(Var a, std::span<const int> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < a.rows(), "gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return tape_of(a).push(std::move(out), {a}, [a, idx](const Matrix& g, Tape& tp) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    for (size_t i = 0; i < idx.size(); ++i) full.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    tp.accumulate(a.id(), full);
  });
}

Var scatter_rows(std::span<const Var> parts, std::span<const std::vector<int>> rows,
                 Eigen::Index total_rows) {
  require(!parts.empty() && parts.size() == rows.size(), "scatter_rows: size mismatch");
  const auto cols = parts.front().cols();
  Matrix out = Matrix::Zero(total_rows, cols);
  for (size_t k = 0; k < parts.size(); ++k) {
    require(parts[k].cols() == cols, "scatter_rows: column mismatch");
    require(static_cast<Eigen::Index>(rows[k].size()) == parts[k].rows(),
            "scatter_rows: index count mismatch");
    for (size_t i = 0; i < rows[k].size(); ++i) {
      out.row(rows[k][i]) = parts[k].value().row(static_cast<Eigen::Index>(i));
    }
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  std::vector<std::vector<int>> idx(rows.begin(), rows.end());
  return tape_of(parts.front())
      .push(std::move(out), parts, [saved, idx](const Matrix& g, Tape& tp) {
        for (size_t k = 0; k < saved.size(); ++k) {
          if (!tp.needs_grad(saved[k].id())) continue;
          Matrix part(static_cast<Eigen::Index>(idx[k].size()), g.cols());
          for (size_t i = 0; i < idx[k].size(); ++i) {
            part.row(static_cast<Eigen::Index>(i)) = g.row(idx[k][i]);
          }
          tp.accumulate(saved[k].id(), part);
        }
      });
}

// --- attention ---------------------------------------------------------

namespace {

Var softmax_backward_node(Tape& t, Var a, Matrix y) {
  return t.push(y, {a}, [a, y](const Matrix& g, Tape& tp) {
    Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    Matrix gin = y.cwiseProduct(g - dot.replicate(1, g.cols()));
    tp.accumulate(a.id(), gin);
  });
}

}  // namespace

Var softmax_rows(Var a) {
  Matrix y = a.value();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double mx = y.row(i).maxCoeff();
    y.row(i) = (y.row(i).array() - mx).exp().matrix();
    y.row(i) /= y.row(i).sum();
  }
  return softmax_backward_node(tape_of(a), a, std::move(y));
}

Var masked_softmax_rows(Var a, const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
  require(mask.rows() == a.rows() && mask.cols() == a.cols(), "masked_softmax: mask shape");
  Matrix y = Matrix::Zero(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (mask(i, j)) mx = std::max(mx, a.value()(i, j));
    }
    require(std::isfinite(mx), "masked_softmax: empty row");
    double total = 0.0;
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (mask(i, j)) {
        y(i, j) = std::exp(a.value()(i, j) - mx);
        total += y(i, j);
      }
    }
    y.row(i) /= total;
  }
  return softmax_backward_node(tape_of(a), a, std::move(y));
}

// --- convolution and sampling ------------------------------------------

ConvGeometry ConvGeometry::same_ceil(int in_h, int in_w, int kernel, int stride) {
  ConvGeometry g;
  g.in_h = in_h;
  g.in_w = in_w;
  g.kernel = kernel;
  g.stride = stride;
  g.out_h = (in_h + stride - 1) / stride;
  g.out_w = (in_w + stride - 1) / stride;
  const int total_h = std::max((g.out_h - 1) * stride + kernel - in_h, 0);
  const int total_w = std::max((g.out_w - 1) * stride + kernel - in_w, 0);
  g.pad_y = total_h / 2;
  g.pad_x = total_w / 2;
  return g;
}

namespace {

RowMajorMatrix im2col(const Matrix& x, const ConvGeometry& g) {
  const auto c = x.cols();
  const int k = g.kernel;
  RowMajorMatrix cols = RowMajorMatrix::Zero(static_cast<Eigen::Index>(g.out_h) * g.out_w,
                                             static_cast<Eigen::Index>(k) * k * c);
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      const Eigen::Index r = static_cast<Eigen::Index>(oy) * g.out_w + ox;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * g.stride - g.pad_y + ky;
        if (iy < 0 || iy >= g.in_h) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * g.stride - g.pad_x + kx;
          if (ix < 0 || ix >= g.in_w) continue;
          cols.block(r, (static_cast<Eigen::Index>(ky) * k + kx) * c, 1, c) =
              x.row(static_cast<Eigen::Index>(iy) * g.in_w + ix);
        }
      }
    }
  }
  return cols;
}

Matrix col2im(const RowMajorMatrix& dcols, const ConvGeometry& g, Eigen::Index c) {
  const int k = g.kernel;
  Matrix dx = Matrix::Zero(static_cast<Eigen::Index>(g.in_h) * g.in_w, c);
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      const Eigen::Index r = static_cast<Eigen::Index>(oy) * g.out_w + ox;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * g.stride - g.pad_y + ky;
        if (iy < 0 || iy >= g.in_h) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * g.stride - g.pad_x + kx;
          if (ix < 0 || ix >= g.in_w) continue;
          dx.row(static_cast<Eigen::Index>(iy) * g.in_w + ix) +=
              dcols.block(r, (static_cast<Eigen::Index>(ky) * k + kx) * c, 1, c);
        }
      }
    }
  }
  return dx;
}

}  // namespace

Var conv2d(Var x, Var weight, Var bias, const ConvGeometry& g) {
  const auto c_in = x.cols();
  require(x.rows() == static_cast<Eigen::Index>(g.in_h) * g.in_w, "conv2d: input size");
  require(weight.rows() == static_cast<Eigen::Index>(g.kernel) * g.kernel * c_in,
          "conv2d: weight rows");
  require(bias.rows() == 1 && bias.cols() == weight.cols(), "conv2d: bias shape");
  auto& t = tape_of(x);
  RowMajorMatrix cols = im2col(x.value(), g);
  Matrix out = cols * weight.value();
  out.rowwise() += bias.value().row(0);
  const bool keep = t.recording();
  return t.push(std::move(out), {x, weight, bias},
                [x, weight, bias, g, c_in, cols = keep ? std::move(cols) : RowMajorMatrix()](
                    const Matrix& grad, Tape& tp) {
                  if (tp.needs_grad(weight.id())) {
                    tp.accumulate_expr(weight.id(), cols.transpose() * grad);
                  }
                  if (tp.needs_grad(bias.id())) tp.accumulate_expr(bias.id(), grad.colwise().sum());
                  if (tp.needs_grad(x.id())) {
                    RowMajorMatrix dcols = grad * weight.value().transpose();
                    tp.accumulate(x.id(), col2im(dcols, g, c_in));
                  }
                });
}

namespace {

struct Tap {
  int row;
  double weight;
};

// Bilinear taps for a continuous point with border clamping.
void bilinear_taps(double px, double py, int h, int w, std::vector<Tap>& taps, double scale) {
  const double u = std::clamp(px - 0.5, 0.0, static_cast<double>(w - 1));
  const double v = std::clamp(py - 0.5, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double lx = u - x0;
  const double ly = v - y0;
  taps.push_back({y0 * w + x0, scale * (1 - lx) * (1 - ly)});
  taps.push_back({y0 * w + x1, scale * lx * (1 - ly)});
  taps.push_back({y1 * w + x0, scale * (1 - lx) * ly});
  taps.push_back({y1 * w + x1, scale * lx * ly});
}

}  // namespace

Var roi_align_mean(Var x, int h, int w, std::span<const GridBox> boxes, int out) {
  require(x.rows() == static_cast<Eigen::Index>(h) * w, "roi_align: map size");
  require(!boxes.empty() && out >= 1, "roi_align: needs boxes");
  std::vector<Tap> taps;
  const double scale = 1.0 / (static_cast<double>(out) * out * static_cast<double>(boxes.size()));
  for (const auto& b : boxes) {
    const double bw = (b.x1 - b.x0) / out;
    const double bh = (b.y1 - b.y0) / out;
    for (int iy = 0; iy < out; ++iy) {
      for (int ix = 0; ix < out; ++ix) {
        bilinear_taps(b.x0 + (ix + 0.5) * bw, b.y0 + (iy + 0.5) * bh, h, w, taps, scale);
      }
    }
  }
  Matrix result = Matrix::Zero(1, x.cols());
  for (const auto& tap : taps) result += tap.weight * x.value().row(tap.row);
  return tape_of(x).push(std::move(result), {x}, [x, taps](const Matrix& g, Tape& tp) {
    Matrix dx = Matrix::Zero(x.rows(), x.cols());
    for (const auto& tap : taps) dx.row(tap.row) += tap.weight * g.row(0);
    tp.accumulate(x.id(), dx);
  });
}

}  // namespace camiqa::ad
