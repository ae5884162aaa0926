#pragma once

// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation in creation order; Tape::backward replays the
// recorded closures in reverse. Feature maps are stored cell-major: a map with
// height h, width w and c channels is an (h*w) x c matrix, row index y*w + x.

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace camiqa::ad {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

/// A trainable tensor with its accumulated gradient.
class Parameter {
 public:
  Parameter(std::string name, Matrix value);

  const std::string& name() const { return name_; }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }

  Matrix value;
  Matrix grad;

 private:
  std::string name_;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  /// Receives the gradient of the node's output; accumulates into parents.
  using Backward = std::function<void(const Matrix& grad_out, Tape& tape)>;

  /// With record == false no backward closures are stored (inference).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& p);

  /// Adds a computed node. `parents` decide whether it needs a gradient.
  Var push(Matrix value, std::initializer_list<Var> parents, Backward backward);
  Var push(Matrix value, std::span<const Var> parents, Backward backward);

  const Matrix& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  bool needs_grad(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }
  bool recording() const { return record_; }

  void accumulate(int id, const Matrix& g);

  template <typename Expr>
  void accumulate_expr(int id, const Expr& g) {
    auto& node = nodes_[static_cast<size_t>(id)];
    if (!node.needs_grad) return;
    if (node.grad.size() == 0) {
      node.grad = g;
    } else {
      node.grad += g;
    }
  }

  /// Reverse sweep from a 1x1 root. Parameter gradients are added into
  /// Parameter::grad (scaled by `seed`).
  void backward(Var root, double seed = 1.0);

  /// Gradient of a node after backward(); zero matrix when none reached it.
  Matrix grad(Var v) const;

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  bool record_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// --- elementwise and linear algebra -------------------------------------

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// a (n x m) plus a 1 x m row broadcast over rows.
Var add_row(Var a, Var row);
/// Multiplies row i of `a` by s[i] (s is a constant).
Var scale_rows(Var a, const Eigen::VectorXd& s);
/// 1 x m row repeated n times.
Var broadcast_rows(Var row, Eigen::Index n);
/// (n x 1) and (n x 1) -> n x n with out(i, j) = a(i) + b(j).
Var outer_sum(Var a, Var b);

Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var elu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var abs(Var a);
/// Clamps values; gradient is passed only where lo < x < hi.
Var clamp(Var a, double lo, double hi);

Var sum(Var a);
Var mean(Var a);
/// Column means, 1 x cols.
Var mean_rows(Var a);

// --- structural --------------------------------------------------------

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var gather_rows(Var a, std::span<const int> rows);
/// Inverse of a partition: part k's rows land at rows[k] of a total_rows matrix.
Var scatter_rows(std::span<const Var> parts, std::span<const std::vector<int>> rows,
                 Eigen::Index total_rows);

// --- attention ---------------------------------------------------------

Var softmax_rows(Var a);
/// Softmax over entries where mask(i, j) is true; other entries are exactly 0.
Var masked_softmax_rows(Var a, const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& mask);

// --- convolution and sampling ------------------------------------------

struct ConvGeometry {
  int in_h = 0;
  int in_w = 0;
  int kernel = 3;
  int stride = 1;
  int pad_y = 1;  // top padding; bottom follows from out_h
  int pad_x = 1;  // left padding; right follows from out_w
  int out_h = 0;
  int out_w = 0;

  /// Output size ceil(in / stride) with symmetric "same"-style padding.
  static ConvGeometry same_ceil(int in_h, int in_w, int kernel, int stride);
};

/// x: (in_h*in_w) x c_in, weight: (kernel*kernel*c_in) x c_out, bias: 1 x c_out.
/// Out-of-range taps read zero.
Var conv2d(Var x, Var weight, Var bias, const ConvGeometry& g);

/// Axis-aligned box in feature-grid continuous coordinates (cell i spans
/// [i, i+1), its centre is i + 0.5).
struct GridBox {
  double x0, y0, x1, y1;
};

/// Bilinear ROI align with an out x out bin grid (one sample per bin centre),
/// averaged over bins and boxes. Returns a 1 x c row.
Var roi_align_mean(Var x, int h, int w, std::span<const GridBox> boxes, int out = 3);

}  // namespace camiqa::ad
