#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "covctl/rng.hpp"
#include "covctl/tape.hpp"

namespace covctl::nn {

using ad::Matrix;
using ad::Param;
using ad::Tape;
using ad::Var;

using NamedParams = std::vector<std::pair<std::string, Param*>>;

/// Fills a parameter with uniform values scaled by 1/sqrt(fan_in).
inline void init_uniform(Param& p, std::size_t fan_in, Rng& rng) {
  const double lim = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < p.value.rows(); ++i)
    for (Eigen::Index j = 0; j < p.value.cols(); ++j)
      p.value(i, j) = rng.uniform(-lim, lim);
}

enum class Activation { kIdentity, kTanh };

/// Fully connected layer on batch rows: activation(x W + b).
struct Dense {
  Param w;  // in x out
  Param b;  // 1 x out
  Activation act{Activation::kTanh};

  Dense() = default;
  Dense(Eigen::Index in, Eigen::Index out, Activation act_, Rng& rng)
      : w(in, out), b(1, out), act(act_) {
    init_uniform(w, static_cast<std::size_t>(in), rng);
    init_uniform(b, static_cast<std::size_t>(in), rng);
  }

  Var forward(Tape& t, Var x) {
    Var y = t.add_rowvec(t.matmul(x, t.param(w)), t.param(b));
    return act == Activation::kTanh ? t.tanh_(y) : y;
  }

  void collect(const std::string& prefix, NamedParams& out) {
    out.emplace_back(prefix + "/w", &w);
    out.emplace_back(prefix + "/b", &b);
  }
};

/// Single LSTM cell unrolled over a time-ordered sequence, returning the
/// final hidden state. Gate layout along the 4H axis is [input, forget,
/// candidate, output]; the forget-gate bias starts at 1.
struct LstmCell {
  Param w_in;   // in x 4H
  Param w_rec;  // H x 4H
  Param bias;   // 1 x 4H
  Eigen::Index in_dim{0};
  Eigen::Index hidden{0};

  LstmCell() = default;
  LstmCell(Eigen::Index in, Eigen::Index hidden_, Rng& rng)
      : w_in(in, 4 * hidden_),
        w_rec(hidden_, 4 * hidden_),
        bias(1, 4 * hidden_),
        in_dim(in),
        hidden(hidden_) {
    init_uniform(w_in, static_cast<std::size_t>(in), rng);
    init_uniform(w_rec, static_cast<std::size_t>(hidden_), rng);
    bias.value.setZero();
    bias.value.middleCols(hidden_, hidden_).setConstant(1.0);
  }

  /// seq holds one B x in node per sequence element. An empty sequence maps
  /// to the zero hidden state.
  Var forward(Tape& t, std::span<const Var> seq, Eigen::Index batch) {
    if (seq.empty()) return t.leaf(Matrix::Zero(batch, hidden));
    Var wx = t.param(w_in);
    Var wh = t.param(w_rec);
    Var b = t.param(bias);
    Var h = t.leaf(Matrix::Zero(batch, hidden));
    Var c = t.leaf(Matrix::Zero(batch, hidden));
    for (const Var& x : seq) {
      if (t.value(x).cols() != in_dim)
        throw std::invalid_argument("LstmCell: element dimension mismatch");
      Var z = t.add_rowvec(t.add(t.matmul(x, wx), t.matmul(h, wh)), b);
      Var gi = t.sigmoid(t.cols(z, 0, hidden));
      Var gf = t.sigmoid(t.cols(z, hidden, hidden));
      Var gc = t.tanh_(t.cols(z, 2 * hidden, hidden));
      Var go = t.sigmoid(t.cols(z, 3 * hidden, hidden));
      c = t.add(t.mul(gf, c), t.mul(gi, gc));
      h = t.mul(go, t.tanh_(c));
    }
    return h;
  }

  void collect(const std::string& prefix, NamedParams& out) {
    out.emplace_back(prefix + "/w_in", &w_in);
    out.emplace_back(prefix + "/w_rec", &w_rec);
    out.emplace_back(prefix + "/bias", &bias);
  }
};

/// Single-head scaled dot-product self-attention:
/// softmax((X Wq)(X Wk)^T / sqrt(d_k)) (X Wv), softmax row-wise.
struct AttentionBlock {
  Param w_q;  // d_m x d_k
  Param w_k;  // d_m x d_k
  Param w_v;  // d_m x d_v
  Eigen::Index d_m{0}, d_k{0}, d_v{0};

  AttentionBlock() = default;
  AttentionBlock(Eigen::Index d_m_, Eigen::Index d_k_, Eigen::Index d_v_,
                 Rng& rng)
      : w_q(d_m_, d_k_), w_k(d_m_, d_k_), w_v(d_m_, d_v_),
        d_m(d_m_), d_k(d_k_), d_v(d_v_) {
    init_uniform(w_q, static_cast<std::size_t>(d_m_), rng);
    init_uniform(w_k, static_cast<std::size_t>(d_m_), rng);
    init_uniform(w_v, static_cast<std::size_t>(d_m_), rng);
  }

  Var forward(Tape& t, Var x) {
    if (t.value(x).cols() != d_m)
      throw std::invalid_argument("AttentionBlock: input width != d_m");
    Var q = t.matmul(x, t.param(w_q));
    Var k = t.matmul(x, t.param(w_k));
    Var v = t.matmul(x, t.param(w_v));
    Var scores =
        t.scale(t.matmul(q, t.transpose(k)),
                1.0 / std::sqrt(static_cast<double>(d_k)));
    return t.matmul(t.softmax_rows(scores), v);
  }

  void collect(const std::string& prefix, NamedParams& out) {
    out.emplace_back(prefix + "/w_q", &w_q);
    out.emplace_back(prefix + "/w_k", &w_k);
    out.emplace_back(prefix + "/w_v", &w_v);
  }
};

/// Learnable row-wise layer normalization (gain starts at 1, bias at 0).
struct LayerNorm {
  Param gain;  // 1 x d
  Param bias;  // 1 x d

  LayerNorm() = default;
  explicit LayerNorm(Eigen::Index d) : gain(1, d), bias(1, d) {
    gain.value.setOnes();
    bias.value.setZero();
  }

  Var forward(Tape& t, Var x) {
    return t.layer_norm_rows(x, t.param(gain), t.param(bias));
  }

  void collect(const std::string& prefix, NamedParams& out) {
    out.emplace_back(prefix + "/gain", &gain);
    out.emplace_back(prefix + "/bias", &bias);
  }
};

}  // namespace covctl::nn
