#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace covctl::ad {

using Matrix = Eigen::MatrixXd;

/// A learnable matrix: value plus a same-shape gradient accumulator. The
/// accumulator collects contributions across backward passes until an
/// optimizer step consumes it.
struct Param {
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(Eigen::Index rows, Eigen::Index cols)
      : value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

/// Handle to a node on a Tape.
struct Var {
  int idx{-1};
};

/// Reverse-mode autodiff over a recorded operation sequence. Every op pushes
/// a node holding its value, a zeroed gradient and a backward closure;
/// backward() seeds the (scalar) output and replays the sequence in reverse.
/// A tape is built for one forward pass and then cleared or discarded.
class Tape {
 public:
  Var leaf(Matrix value) { return push(std::move(value), nullptr); }

  /// Leaf bound to an external parameter; backward adds the node gradient
  /// into the parameter's accumulator.
  Var param(Param& p) {
    Var v = push(p.value, nullptr);
    Param* target = &p;
    int idx = v.idx;
    nodes_[idx].back = [idx, target](Tape& t) {
      target->grad += t.nodes_[idx].grad;
    };
    return v;
  }

  const Matrix& value(Var v) const { return nodes_[v.idx].value; }
  const Matrix& grad(Var v) const { return nodes_[v.idx].grad; }
  double scalar(Var v) const {
    check(value(v).size() == 1, "scalar: node is not 1x1");
    return value(v)(0, 0);
  }

  Var matmul(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    check(A.cols() == B.rows(), "matmul: inner dimensions differ");
    return push(A * B, [a, b](Tape& t, const Matrix& g, int out) {
      t.nodes_[a.idx].grad.noalias() += g * t.value(b).transpose();
      t.nodes_[b.idx].grad.noalias() += t.value(a).transpose() * g;
      (void)out;
    });
  }

  Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    return push(value(a) + value(b), [a, b](Tape& t, const Matrix& g, int) {
      t.nodes_[a.idx].grad += g;
      t.nodes_[b.idx].grad += g;
    });
  }

  Var sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    return push(value(a) - value(b), [a, b](Tape& t, const Matrix& g, int) {
      t.nodes_[a.idx].grad += g;
      t.nodes_[b.idx].grad -= g;
    });
  }

  Var mul(Var a, Var b) {  // elementwise
    check_same_shape(a, b, "mul");
    return push(value(a).cwiseProduct(value(b)),
                [a, b](Tape& t, const Matrix& g, int) {
                  t.nodes_[a.idx].grad += g.cwiseProduct(t.value(b));
                  t.nodes_[b.idx].grad += g.cwiseProduct(t.value(a));
                });
  }

  Var scale(Var a, double c) {
    return push(value(a) * c, [a, c](Tape& t, const Matrix& g, int) {
      t.nodes_[a.idx].grad += g * c;
    });
  }

  Var neg(Var a) { return scale(a, -1.0); }

  Var add_scalar(Var a, double c) {
    return push(value(a).array() + c, [a](Tape& t, const Matrix& g, int) {
      t.nodes_[a.idx].grad += g;
    });
  }

  /// Adds a 1 x k row vector to every row of a.
  Var add_rowvec(Var a, Var r) {
    check(value(r).rows() == 1 && value(r).cols() == value(a).cols(),
          "add_rowvec: r must be 1 x cols(a)");
    Matrix out = value(a);
    out.rowwise() += value(r).row(0);
    return push(std::move(out), [a, r](Tape& t, const Matrix& g, int) {
      t.nodes_[a.idx].grad += g;
      t.nodes_[r.idx].grad += g.colwise().sum();
    });
  }

  /// Multiplies every row of a elementwise by a 1 x k row vector.
  Var mul_rowvec(Var a, Var r) {
    check(value(r).rows() == 1 && value(r).cols() == value(a).cols(),
          "mul_rowvec: r must be 1 x cols(a)");
    Matrix out = value(a).array().rowwise() * value(r).row(0).array();
    return push(std::move(out), [a, r](Tape& t, const Matrix& g, int) {
      t.nodes_[a.idx].grad +=
          (g.array().rowwise() * t.value(r).row(0).array()).matrix();
      t.nodes_[r.idx].grad += g.cwiseProduct(t.value(a)).colwise().sum();
    });
  }

  Var tanh_(Var a) {
    Matrix y = value(a).array().tanh();
    return push(std::move(y), [a](Tape& t, const Matrix& g, int out) {
      const Matrix& y_ = t.nodes_[out].value;
      t.nodes_[a.idx].grad +=
          (g.array() * (1.0 - y_.array().square())).matrix();
    });
  }

  Var sigmoid(Var a) {
    Matrix y = (1.0 / (1.0 + (-value(a).array()).exp())).matrix();
    return push(std::move(y), [a](Tape& t, const Matrix& g, int out) {
      const auto y_ = t.nodes_[out].value.array();
      t.nodes_[a.idx].grad += (g.array() * y_ * (1.0 - y_)).matrix();
    });
  }

  Var exp_(Var a) {
    Matrix y = value(a).array().exp();
    return push(std::move(y), [a](Tape& t, const Matrix& g, int out) {
      t.nodes_[a.idx].grad +=
          (g.array() * t.nodes_[out].value.array()).matrix();
    });
  }

  Var log_(Var a) {
    Matrix y = value(a).array().log();
    return push(std::move(y), [a](Tape& t, const Matrix& g, int) {
      t.nodes_[a.idx].grad += (g.array() / t.value(a).array()).matrix();
    });
  }

  Var cols(Var a, Eigen::Index j0, Eigen::Index len) {
    check(j0 >= 0 && len > 0 && j0 + len <= value(a).cols(),
          "cols: slice out of range");
    return push(value(a).middleCols(j0, len),
                [a, j0, len](Tape& t, const Matrix& g, int) {
                  t.nodes_[a.idx].grad.middleCols(j0, len) += g;
                });
  }

  Var concat_cols(Var a, Var b) {
    check(value(a).rows() == value(b).rows(), "concat_cols: row mismatch");
    Matrix out(value(a).rows(), value(a).cols() + value(b).cols());
    out << value(a), value(b);
    const Eigen::Index ca = value(a).cols();
    return push(std::move(out), [a, b, ca](Tape& t, const Matrix& g, int) {
      t.nodes_[a.idx].grad += g.leftCols(ca);
      t.nodes_[b.idx].grad += g.rightCols(g.cols() - ca);
    });
  }

  Var transpose(Var a) {
    return push(value(a).transpose(), [a](Tape& t, const Matrix& g, int) {
      t.nodes_[a.idx].grad += g.transpose();
    });
  }

  /// Row-wise softmax with max subtraction.
  Var softmax_rows(Var a) {
    Matrix y = value(a);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const double mx = y.row(i).maxCoeff();
      y.row(i) = (y.row(i).array() - mx).exp();
      y.row(i) /= y.row(i).sum();
    }
    return push(std::move(y), [a](Tape& t, const Matrix& g, int out) {
      const Matrix& y_ = t.nodes_[out].value;
      Matrix& da = t.nodes_[a.idx].grad;
      for (Eigen::Index i = 0; i < y_.rows(); ++i) {
        const double s = g.row(i).dot(y_.row(i));
        da.row(i) += ((g.row(i).array() - s) * y_.row(i).array()).matrix();
      }
    });
  }

  /// Row-wise layer normalization: (x - mean)/sqrt(var + 1e-5) * gain + bias,
  /// gain and bias broadcast over rows.
  Var layer_norm_rows(Var x, Var gain, Var bias) {
    constexpr double kEps = 1e-5;
    const Matrix& X = value(x);
    check(X.cols() >= 2, "layer_norm_rows: row length must be >= 2");
    check(value(gain).rows() == 1 && value(gain).cols() == X.cols() &&
              value(bias).rows() == 1 && value(bias).cols() == X.cols(),
          "layer_norm_rows: gain/bias must be 1 x cols(x)");
    const double d = static_cast<double>(X.cols());
    Matrix xhat(X.rows(), X.cols());
    Matrix inv_std(X.rows(), 1);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double mean = X.row(i).mean();
      const double var = (X.row(i).array() - mean).square().sum() / d;
      inv_std(i, 0) = 1.0 / std::sqrt(var + kEps);
      xhat.row(i) = (X.row(i).array() - mean) * inv_std(i, 0);
    }
    Matrix out = (xhat.array().rowwise() * value(gain).row(0).array())
                     .rowwise() +
                 value(bias).row(0).array();
    auto xhat_c = std::make_shared<Matrix>(std::move(xhat));
    auto istd_c = std::make_shared<Matrix>(std::move(inv_std));
    return push(std::move(out),
                [x, gain, bias, xhat_c, istd_c, d](Tape& t, const Matrix& g,
                                                   int) {
                  const Matrix& xh = *xhat_c;
                  Matrix& dx = t.nodes_[x.idx].grad;
                  const auto gain_row = t.value(gain).row(0).array();
                  for (Eigen::Index i = 0; i < g.rows(); ++i) {
                    const auto gi = g.row(i).array();
                    const auto dxhat = gi * gain_row;
                    const double istd = (*istd_c)(i, 0);
                    const double sum_dxhat = dxhat.sum();
                    const double sum_dxhat_xhat =
                        (dxhat * xh.row(i).array()).sum();
                    dx.row(i) += (istd *
                                  (dxhat - sum_dxhat / d -
                                   xh.row(i).array() * sum_dxhat_xhat / d))
                                     .matrix();
                  }
                  t.nodes_[gain.idx].grad +=
                      g.cwiseProduct(xh).colwise().sum();
                  t.nodes_[bias.idx].grad += g.colwise().sum();
                });
  }

  Var sum(Var a) {
    Matrix out(1, 1);
    out(0, 0) = value(a).sum();
    return push(std::move(out), [a](Tape& t, const Matrix& g, int) {
      t.nodes_[a.idx].grad.array() += g(0, 0);
    });
  }

  Var mean(Var a) {
    const double n = static_cast<double>(value(a).size());
    Matrix out(1, 1);
    out(0, 0) = value(a).sum() / n;
    return push(std::move(out), [a, n](Tape& t, const Matrix& g, int) {
      t.nodes_[a.idx].grad.array() += g(0, 0) / n;
    });
  }

  /// Sums each row: (n x k) -> (n x 1).
  Var rowsum(Var a) {
    return push(value(a).rowwise().sum(),
                [a](Tape& t, const Matrix& g, int) {
                  t.nodes_[a.idx].grad +=
                      g.replicate(1, t.value(a).cols());
                });
  }

  /// Broadcasts a 1x1 scalar to an (rows x 1) column.
  Var bcast_scalar(Var s, Eigen::Index rows) {
    check(value(s).size() == 1, "bcast_scalar: input must be 1x1");
    return push(Matrix::Constant(rows, 1, value(s)(0, 0)),
                [s](Tape& t, const Matrix& g, int) {
                  t.nodes_[s.idx].grad(0, 0) += g.sum();
                });
  }

  /// Elementwise minimum; gradient routes to the smaller argument, ties to a.
  Var minimum(Var a, Var b) {
    check_same_shape(a, b, "minimum");
    return push(value(a).cwiseMin(value(b)),
                [a, b](Tape& t, const Matrix& g, int) {
                  const Matrix mask =
                      (t.value(a).array() <= t.value(b).array())
                          .cast<double>()
                          .matrix();
                  t.nodes_[a.idx].grad += g.cwiseProduct(mask);
                  t.nodes_[b.idx].grad +=
                      g.cwiseProduct((1.0 - mask.array()).matrix());
                });
  }

  /// Elementwise clamp to [lo, hi]; gradient passes inside the closed range.
  Var clamp(Var a, double lo, double hi) {
    return push(value(a).cwiseMax(lo).cwiseMin(hi),
                [a, lo, hi](Tape& t, const Matrix& g, int) {
                  const Matrix mask = ((t.value(a).array() >= lo) &&
                                       (t.value(a).array() <= hi))
                                          .cast<double>()
                                          .matrix();
                  t.nodes_[a.idx].grad += g.cwiseProduct(mask);
                });
  }

  /// Seeds the scalar output with 1 and replays the op sequence in reverse.
  void backward(Var out) {
    check(value(out).size() == 1, "backward: output must be scalar");
    nodes_[out.idx].grad(0, 0) = 1.0;
    for (int i = out.idx; i >= 0; --i)
      if (nodes_[i].back) nodes_[i].back(*this);
  }

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&)> back;
  };

  static void check(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  }

  void check_same_shape(Var a, Var b, const char* op) const {
    if (value(a).rows() != value(b).rows() ||
        value(a).cols() != value(b).cols())
      throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }

  Var push(Matrix value, std::function<void(Tape&)> back) {
    Node node;
    node.grad = Matrix::Zero(value.rows(), value.cols());
    node.value = std::move(value);
    node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  /// Convenience overload: the closure receives the node's own gradient.
  Var push(Matrix value,
           std::function<void(Tape&, const Matrix&, int)> back) {
    Var v = push(std::move(value), std::function<void(Tape&)>());
    if (back) {
      const int idx = v.idx;
      nodes_[idx].back = [idx, back = std::move(back)](Tape& t) {
        back(t, t.nodes_[idx].grad, idx);
      };
    }
    return v;
  }

  std::vector<Node> nodes_;
};

}  // namespace covctl::ad
