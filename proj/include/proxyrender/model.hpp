// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "proxyrender/conditioning.hpp"
#include "proxyrender/errors.hpp"
#include "proxyrender/rng.hpp"
#include "proxyrender/rope3d.hpp"

namespace prox {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ColVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Transformer hyper-parameters. dim must equal heads * head_dim.
struct ModelConfig {
  int dim = 64;
  int depth = 4;
  int heads = 4;
  int head_dim = 16;
  int patch = 2;
  int latent_channels = kLatentChannels;
  double theta_base = 10000.0;

  void validate() const {
    if (dim < 2 || depth < 1 || heads < 1 || head_dim < 6 || patch < 1 ||
        latent_channels < 1) {
      throw InvalidInput("model config: non-positive dimension");
    }
    if (heads * head_dim != dim) {
      throw InvalidInput("model config: heads * head_dim must equal dim");
    }
    if (dim % 2 != 0) throw InvalidInput("model config: dim must be even");
    RopeConfig::with_default_split(head_dim, theta_base);  // throws if unsplittable
  }
  int ref_token_dim() const { return kRefChannels * patch * patch; }
  int target_token_dim() const { return kTargetChannels * patch * patch; }
  int out_dim() const { return latent_channels * patch * patch; }
  RopeConfig rope() const { return RopeConfig::with_default_split(head_dim, theta_base); }
};

/// Named flat parameter segments backed by one contiguous vector, so the
/// whole model can be treated as a single flat parameter list (finite
/// differences, optimizer state, serialization).
template <typename T>
struct ParamStore {
  struct Segment {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
  };
  std::vector<Segment> segments;
  std::vector<T> values;

  std::size_t add(std::string name, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    Segment seg;
    seg.name = std::move(name);
    seg.shape = std::move(shape);
    seg.offset = values.size();
    seg.size = n;
    segments.push_back(std::move(seg));
    values.resize(values.size() + n, T(0));
    return segments.size() - 1;
  }
  T* data(std::size_t idx) { return values.data() + segments[idx].offset; }
  const T* data(std::size_t idx) const { return values.data() + segments[idx].offset; }
  std::size_t size() const { return values.size(); }
  const Segment* find(const std::string& name) const {
    for (const auto& s : segments) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }
};

/// Saved forward intermediates for one transformer block.
template <typename T>
struct BlockTape {
  RowMat<T> normed1;  // LN1 output
  ColVec<T> inv_std1;
  RowMat<T> qkv;  // pre-rotation
  std::vector<RowMat<T>> probs;  // per head, [L, L]
  RowMat<T> attn_concat;
  RowMat<T> attn_out;
  RowMat<T> normed2;
  ColVec<T> inv_std2;
  RowMat<T> mlp_pre;
  RowMat<T> mlp_act;
  RowMat<T> mlp_out;
};

/// Full forward tape; required by backward().
template <typename T>
struct Tape {
  RowMat<T> ref_in;   // raw reference tokens, [Lr, 7p²]
  RowMat<T> tgt_in;   // raw target tokens, [Lt, 11p²]
  bool refs_dropped = false;
  RowMat<T> t_sin;    // [2, d] sinusoid input; row 0 = clean stream (refs)
  RowMat<T> t_h_pre;  // [2, d]
  RowMat<T> t_h_act;
  RowMat<T> t_emb;
  RowMat<T> t_silu;   // silu(t_emb), the modulation MLP input
  std::vector<RowMat<T>> block_mod;  // depth × [2, 6d]
  RowMat<T> final_mod;               // [2, 2d]
  std::vector<BlockTape<T>> blocks;
  RowMat<T> normed_final;  // target rows only
  ColVec<T> inv_std_final;
  std::size_t n_ref_tokens = 0;
  std::size_t n_tokens = 0;
};

namespace detail {

template <typename T>
inline T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}
template <typename T>
inline T silu(T x) {
  return x * sigmoid(x);
}
template <typename T>
inline T silu_grad(T x) {
  const T s = sigmoid(x);
  return s * (T(1) + x * (T(1) - s));
}

/// Row-wise LayerNorm without affine parameters. Returns normalized matrix,
/// stores 1/std per row.
template <typename T>
RowMat<T> layer_norm(const RowMat<T>& x, ColVec<T>& inv_std, T eps = T(1e-6)) {
  RowMat<T> out(x.rows(), x.cols());
  inv_std.resize(x.rows());
  const T n = static_cast<T>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const T mean = x.row(r).sum() / n;
    const T var = (x.row(r).array() - mean).square().sum() / n;
    const T is = T(1) / std::sqrt(var + eps);
    inv_std(r) = is;
    out.row(r) = (x.row(r).array() - mean) * is;
  }
  return out;
}

/// Gradient through layer_norm given grad w.r.t. the normalized output.
template <typename T>
RowMat<T> layer_norm_backward(const RowMat<T>& dnormed, const RowMat<T>& normed,
                              const ColVec<T>& inv_std) {
  RowMat<T> dx(dnormed.rows(), dnormed.cols());
  const T n = static_cast<T>(dnormed.cols());
  for (Eigen::Index r = 0; r < dnormed.rows(); ++r) {
    const T mean_dy = dnormed.row(r).sum() / n;
    const T mean_dyn = (dnormed.row(r).array() * normed.row(r).array()).sum() / n;
    dx.row(r) =
        ((dnormed.row(r).array() - mean_dy) - normed.row(r).array() * mean_dyn) *
        inv_std(r);
  }
  return dx;
}

template <typename T>
void softmax_rows(RowMat<T>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const T mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
}

/// Column sums accumulated row by row. Eigen's partial reductions can pick
/// an address-dependent summation order when vectorized, which would make
/// gradients (and therefore training) depend on heap layout; summing whole
/// rows keeps one add per element in a fixed order.
template <typename Derived>
ColVec<typename Derived::Scalar> ordered_colsum(const Eigen::MatrixBase<Derived>& m) {
  using T = typename Derived::Scalar;
  Eigen::Matrix<T, 1, Eigen::Dynamic> acc =
      Eigen::Matrix<T, 1, Eigen::Dynamic>::Zero(m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) acc += m.row(r);
  return acc.transpose();
}

}  // namespace detail

/// Desk-scale diffusion transformer over the joint reference/target token
/// sequence: separate input projections, adaLN-zero timestep modulation
/// (references modulated with t = 0), 3-axis rotary attention, velocity
/// head on target tokens. Templated so gradient checks can run in double.
template <typename T>
class MiniDiT {
 public:
  MiniDiT(const ModelConfig& config, std::uint64_t seed) : cfg_(config) {
    cfg_.validate();
    rope_cfg_ = cfg_.rope();
    build_segments();
    init_weights(seed);
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  /// Predicted velocity on target tokens, [Lt, latent_channels*p²].
  /// `drop_refs` swaps every reference embedding for the learned null
  /// embedding (classifier-free guidance / conditioning dropout).
  RowMat<T> forward(const ConditioningSequence& seq, double t, bool drop_refs,
                    Tape<T>* tape = nullptr) const {
    if (t < 0.0 || t > 1.0) throw InvalidInput("forward: t must be in [0, 1]");
    check_sequence(seq);
    const std::size_t l_ref = seq.target_token_begin();
    const std::size_t l_all = seq.token_count();
    const std::size_t l_tgt = l_all - l_ref;
    const int d = cfg_.dim;

    Tape<T> local;
    Tape<T>& tp = tape ? *tape : local;
    tp.refs_dropped = drop_refs;
    tp.n_ref_tokens = l_ref;
    tp.n_tokens = l_all;
    tp.blocks.assign(static_cast<std::size_t>(cfg_.depth), {});
    tp.block_mod.assign(static_cast<std::size_t>(cfg_.depth), {});

    tp.ref_in = to_mat(seq.ref_tokens);
    tp.tgt_in = to_mat(seq.target_tokens);

    // Token embeddings.
    RowMat<T> x(l_all, d);
    if (drop_refs) {
      Eigen::Map<const ColVec<T>> null_vec(params_.data(idx_.null_ref), d);
      x.topRows(l_ref).rowwise() = null_vec.transpose();
    } else {
      x.topRows(l_ref) = tp.ref_in * weight(idx_.ref_w, d, cfg_.ref_token_dim()).transpose();
      x.topRows(l_ref).rowwise() += bias(idx_.ref_b, d).transpose();
    }
    x.bottomRows(l_tgt) =
        tp.tgt_in * weight(idx_.tgt_w, d, cfg_.target_token_dim()).transpose();
    x.bottomRows(l_tgt).rowwise() += bias(idx_.tgt_b, d).transpose();

    // Timestep embedding: row 0 is the clean stream (references, t = 0),
    // row 1 the noisy stream (targets at the current t).
    time_embedding(t, tp);

    // Rotary tables shared by all heads.
    const RopeTable<T> rope(seq.indices, rope_cfg_);

    for (int b = 0; b < cfg_.depth; ++b) {
      block_forward(b, x, seq, rope, tp);
    }

    // Final modulated norm + velocity head on target rows only.
    Eigen::Map<const RowMat<T>> ada_f_w(params_.data(idx_.ada_f_w), 2 * d, d);
    Eigen::Map<const ColVec<T>> ada_f_b(params_.data(idx_.ada_f_b), 2 * d);
    tp.final_mod = tp.t_silu * ada_f_w.transpose();
    tp.final_mod.rowwise() += ada_f_b.transpose();

    RowMat<T> x_tgt = x.bottomRows(l_tgt);
    tp.normed_final = detail::layer_norm(x_tgt, tp.inv_std_final);
    RowMat<T> head_in(l_tgt, d);
    const auto shift = tp.final_mod.row(1).head(d).array();
    const auto scale = tp.final_mod.row(1).tail(d).array();
    for (std::size_t r = 0; r < l_tgt; ++r) {
      head_in.row(r).array() = tp.normed_final.row(r).array() * (scale + T(1)) + shift;
    }
    RowMat<T> pred =
        head_in * weight(idx_.head_w, cfg_.out_dim(), d).transpose();
    pred.rowwise() += bias(idx_.head_b, cfg_.out_dim()).transpose();
    return pred;
  }

  /// Accumulate parameter gradients for d(loss)/d(pred) into `grads`
  /// (flat, same layout as params().values). The tape must come from a
  /// forward() call on the same sequence.
  void backward(const ConditioningSequence& seq, const Tape<T>& tape,
                const RowMat<T>& dpred, std::vector<T>& grads) const {
    if (grads.size() != params_.size()) grads.assign(params_.size(), T(0));
    grads_ = &grads;
    const std::size_t l_ref = tape.n_ref_tokens;
    const std::size_t l_all = tape.n_tokens;
    const std::size_t l_tgt = l_all - l_ref;
    const int d = cfg_.dim;
    const RopeTable<T> rope(seq.indices, rope_cfg_);

    // d(modulation MLP input) per stream, accumulated across blocks.
    RowMat<T> d_t_silu = RowMat<T>::Zero(2, d);

    // ---- velocity head ----
    RowMat<T> head_in(l_tgt, d);
    const auto shift_f = tape.final_mod.row(1).head(d).array();
    const auto scale_f = tape.final_mod.row(1).tail(d).array();
    for (std::size_t r = 0; r < l_tgt; ++r) {
      head_in.row(r).array() =
          tape.normed_final.row(r).array() * (scale_f + T(1)) + shift_f;
    }
    grad_mat(idx_.head_w, cfg_.out_dim(), d) += dpred.transpose() * head_in;
    grad_vec(idx_.head_b, cfg_.out_dim()) += detail::ordered_colsum(dpred);
    RowMat<T> dhead_in = dpred * weight(idx_.head_w, cfg_.out_dim(), d);

    RowMat<T> d_final_mod = RowMat<T>::Zero(2, 2 * d);
    RowMat<T> dnormed_f(l_tgt, d);
    for (std::size_t r = 0; r < l_tgt; ++r) {
      dnormed_f.row(r).array() = dhead_in.row(r).array() * (scale_f + T(1));
      d_final_mod.row(1).head(d) += dhead_in.row(r);
      d_final_mod.row(1).tail(d).array() +=
          dhead_in.row(r).array() * tape.normed_final.row(r).array();
    }
    grad_mat(idx_.ada_f_w, 2 * d, d) += d_final_mod.transpose() * tape.t_silu;
    grad_vec(idx_.ada_f_b, 2 * d) += detail::ordered_colsum(d_final_mod);
    d_t_silu +=
        d_final_mod * weight(idx_.ada_f_w, 2 * d, d);

    RowMat<T> dx = RowMat<T>::Zero(l_all, d);
    dx.bottomRows(l_tgt) =
        detail::layer_norm_backward(dnormed_f, tape.normed_final, tape.inv_std_final);

    // ---- transformer blocks, reverse order ----
    for (int b = cfg_.depth - 1; b >= 0; --b) {
      block_backward(b, seq, rope, tape, dx, d_t_silu);
    }

    // ---- token embeddings ----
    if (tape.refs_dropped) {
      grad_vec(idx_.null_ref, d) += detail::ordered_colsum(dx.topRows(l_ref));
    } else {
      grad_mat(idx_.ref_w, d, cfg_.ref_token_dim()) +=
          dx.topRows(l_ref).transpose() * tape.ref_in;
      grad_vec(idx_.ref_b, d) += detail::ordered_colsum(dx.topRows(l_ref));
    }
    grad_mat(idx_.tgt_w, d, cfg_.target_token_dim()) +=
        dx.bottomRows(l_tgt).transpose() * tape.tgt_in;
    grad_vec(idx_.tgt_b, d) += detail::ordered_colsum(dx.bottomRows(l_tgt));

    // ---- timestep MLP (both streams) ----
    RowMat<T> d_t_emb(2, d);
    for (int s = 0; s < 2; ++s) {
      for (int i = 0; i < d; ++i) {
        d_t_emb(s, i) = d_t_silu(s, i) * detail::silu_grad(tape.t_emb(s, i));
      }
    }
    grad_mat(idx_.t_w2, d, d) += d_t_emb.transpose() * tape.t_h_act;
    grad_vec(idx_.t_b2, d) += detail::ordered_colsum(d_t_emb);
    RowMat<T> d_h_act = d_t_emb * weight(idx_.t_w2, d, d);
    RowMat<T> d_h_pre(2, d);
    for (int s = 0; s < 2; ++s) {
      for (int i = 0; i < d; ++i) {
        d_h_pre(s, i) = d_h_act(s, i) * detail::silu_grad(tape.t_h_pre(s, i));
      }
    }
    grad_mat(idx_.t_w1, d, d) += d_h_pre.transpose() * tape.t_sin;
    grad_vec(idx_.t_b1, d) += detail::ordered_colsum(d_h_pre);
    grads_ = nullptr;
  }

 private:
  struct BlockIdx {
    std::size_t qkv_w, qkv_b, out_w, out_b, mlp_w1, mlp_b1, mlp_w2, mlp_b2, ada_w, ada_b;
  };
  struct Idx {
    std::size_t ref_w, ref_b, tgt_w, tgt_b, null_ref;
    std::size_t t_w1, t_b1, t_w2, t_b2;
    std::vector<BlockIdx> blocks;
    std::size_t ada_f_w, ada_f_b, head_w, head_b;
  };

  void build_segments() {
    const std::size_t d = static_cast<std::size_t>(cfg_.dim);
    idx_.ref_w = params_.add("ref_proj.weight", {d, static_cast<std::size_t>(cfg_.ref_token_dim())});
    idx_.ref_b = params_.add("ref_proj.bias", {d});
    idx_.tgt_w = params_.add("tgt_proj.weight", {d, static_cast<std::size_t>(cfg_.target_token_dim())});
    idx_.tgt_b = params_.add("tgt_proj.bias", {d});
    idx_.null_ref = params_.add("null_ref", {d});
    idx_.t_w1 = params_.add("time_mlp.w1", {d, d});
    idx_.t_b1 = params_.add("time_mlp.b1", {d});
    idx_.t_w2 = params_.add("time_mlp.w2", {d, d});
    idx_.t_b2 = params_.add("time_mlp.b2", {d});
    for (int b = 0; b < cfg_.depth; ++b) {
      const std::string p = "blocks." + std::to_string(b) + ".";
      BlockIdx bi;
      bi.qkv_w = params_.add(p + "qkv.weight", {3 * d, d});
      bi.qkv_b = params_.add(p + "qkv.bias", {3 * d});
      bi.out_w = params_.add(p + "attn_out.weight", {d, d});
      bi.out_b = params_.add(p + "attn_out.bias", {d});
      bi.mlp_w1 = params_.add(p + "mlp.w1", {4 * d, d});
      bi.mlp_b1 = params_.add(p + "mlp.b1", {4 * d});
      bi.mlp_w2 = params_.add(p + "mlp.w2", {d, 4 * d});
      bi.mlp_b2 = params_.add(p + "mlp.b2", {d});
      bi.ada_w = params_.add(p + "ada.weight", {6 * d, d});
      bi.ada_b = params_.add(p + "ada.bias", {6 * d});
      idx_.blocks.push_back(bi);
    }
    idx_.ada_f_w = params_.add("final.ada.weight", {2 * d, d});
    idx_.ada_f_b = params_.add("final.ada.bias", {2 * d});
    idx_.head_w = params_.add("head.weight", {static_cast<std::size_t>(cfg_.out_dim()), d});
    idx_.head_b = params_.add("head.bias", {static_cast<std::size_t>(cfg_.out_dim())});
  }

  void normal_fill(Rng& rng, std::size_t seg, double std_dev) {
    T* p = params_.data(seg);
    const std::size_t n = params_.segments[seg].size;
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<T>(rng.normal() * std_dev);
  }

  void init_weights(std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x6d696e69));  // "mini"
    const int d = cfg_.dim;
    const int p2 = cfg_.patch * cfg_.patch;
    // Input projections: image/latent columns get fan-in init, the
    // condition channels (coords, mask, appearance, flag) start at zero so
    // training begins from the unconditioned operating point.
    auto init_proj = [&](std::size_t seg, int in_channels, int live_channels) {
      T* w = params_.data(seg);
      const double std_dev = 1.0 / std::sqrt(static_cast<double>(live_channels * p2));
      for (int row = 0; row < d; ++row) {
        for (int pix = 0; pix < p2; ++pix) {
          for (int ch = 0; ch < in_channels; ++ch) {
            const std::size_t at = static_cast<std::size_t>(row) * in_channels * p2 +
                                   static_cast<std::size_t>(pix) * in_channels + ch;
            w[at] = ch < live_channels ? static_cast<T>(rng.normal() * std_dev) : T(0);
          }
        }
      }
    };
    init_proj(idx_.ref_w, kRefChannels, 3);
    init_proj(idx_.tgt_w, kTargetChannels, cfg_.latent_channels);
    normal_fill(rng, idx_.null_ref, 0.02);
    normal_fill(rng, idx_.t_w1, 1.0 / std::sqrt(static_cast<double>(d)));
    normal_fill(rng, idx_.t_w2, 1.0 / std::sqrt(static_cast<double>(d)));
    for (const BlockIdx& bi : idx_.blocks) {
      normal_fill(rng, bi.qkv_w, 1.0 / std::sqrt(static_cast<double>(d)));
      normal_fill(rng, bi.out_w, 1.0 / std::sqrt(static_cast<double>(d)));
      normal_fill(rng, bi.mlp_w1, 1.0 / std::sqrt(static_cast<double>(d)));
      normal_fill(rng, bi.mlp_w2, 1.0 / std::sqrt(static_cast<double>(4 * d)));
      // ada.* stays zero: every block starts as the identity.
    }
    // final.ada.*, head.* stay zero: the initial model predicts 0.
  }

  void check_sequence(const ConditioningSequence& seq) const {
    if (seq.patch != cfg_.patch) throw InvalidInput("forward: patch size mismatch");
    if (seq.ref_tokens.dims().size() != 2 ||
        seq.ref_tokens.dims()[1] != static_cast<std::size_t>(cfg_.ref_token_dim()) ||
        seq.target_tokens.dims()[1] != static_cast<std::size_t>(cfg_.target_token_dim())) {
      throw InvalidInput("forward: token dims do not match model config");
    }
    if (seq.indices.size() != seq.token_count() ||
        seq.is_reference.size() != seq.token_count()) {
      throw InvalidInput("forward: sequence index table inconsistent");
    }
  }

  static RowMat<T> to_mat(const Tensor& t) {
    RowMat<T> m(t.dims()[0], t.dims()[1]);
    const float* src = t.data();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = static_cast<T>(*src++);
      }
    }
    return m;
  }

  Eigen::Map<const RowMat<T>> weight(std::size_t seg, int rows, int cols) const {
    return Eigen::Map<const RowMat<T>>(params_.data(seg), rows, cols);
  }
  Eigen::Map<const ColVec<T>> bias(std::size_t seg, int n) const {
    return Eigen::Map<const ColVec<T>>(params_.data(seg), n);
  }
  Eigen::Map<RowMat<T>> grad_mat(std::size_t seg, int rows, int cols) const {
    return Eigen::Map<RowMat<T>>(grads_->data() + params_.segments[seg].offset, rows, cols);
  }
  Eigen::Map<ColVec<T>> grad_vec(std::size_t seg, int n) const {
    return Eigen::Map<ColVec<T>>(grads_->data() + params_.segments[seg].offset, n);
  }

  /// Sinusoidal embedding of the scaled timestep, then a 2-layer MLP.
  void time_embedding(double t, Tape<T>& tp) const {
    const int d = cfg_.dim;
    const int half = d / 2;
    tp.t_sin.resize(2, d);
    const double taus[2] = {0.0, 1000.0 * t};
    for (int s = 0; s < 2; ++s) {
      for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        tp.t_sin(s, i) = static_cast<T>(std::sin(taus[s] * freq));
        tp.t_sin(s, half + i) = static_cast<T>(std::cos(taus[s] * freq));
      }
    }
    tp.t_h_pre = tp.t_sin * weight(idx_.t_w1, d, d).transpose();
    tp.t_h_pre.rowwise() += bias(idx_.t_b1, d).transpose();
    tp.t_h_act = tp.t_h_pre.unaryExpr([](T v) { return detail::silu(v); });
    tp.t_emb = tp.t_h_act * weight(idx_.t_w2, d, d).transpose();
    tp.t_emb.rowwise() += bias(idx_.t_b2, d).transpose();
    tp.t_silu = tp.t_emb.unaryExpr([](T v) { return detail::silu(v); });
  }

  void block_forward(int b, RowMat<T>& x, const ConditioningSequence& seq,
                     const RopeTable<T>& rope, Tape<T>& tp) const {
    const int d = cfg_.dim;
    const int hd = cfg_.head_dim;
    const std::size_t l_all = tp.n_tokens;
    const BlockIdx& bi = idx_.blocks[static_cast<std::size_t>(b)];
    BlockTape<T>& bt = tp.blocks[static_cast<std::size_t>(b)];

    // Per-stream modulation: [shift1, scale1, gate1, shift2, scale2, gate2].
    RowMat<T>& mod = tp.block_mod[static_cast<std::size_t>(b)];
    mod = tp.t_silu * weight(bi.ada_w, 6 * d, d).transpose();
    mod.rowwise() += bias(bi.ada_b, 6 * d).transpose();

    bt.normed1 = detail::layer_norm(x, bt.inv_std1);
    RowMat<T> h1(l_all, d);
    for (std::size_t r = 0; r < l_all; ++r) {
      const int s = seq.is_reference[r] ? 0 : 1;
      h1.row(r).array() = bt.normed1.row(r).array() *
                              (mod.row(s).segment(d, d).array() + T(1)) +
                          mod.row(s).head(d).array();
    }

    bt.qkv = h1 * weight(bi.qkv_w, 3 * d, d).transpose();
    bt.qkv.rowwise() += bias(bi.qkv_b, 3 * d).transpose();

    bt.probs.assign(static_cast<std::size_t>(cfg_.heads), {});
    bt.attn_concat.resize(l_all, d);
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    for (int h = 0; h < cfg_.heads; ++h) {
      RowMat<T> q = bt.qkv.middleCols(h * hd, hd);
      RowMat<T> k = bt.qkv.middleCols(d + h * hd, hd);
      const auto v = bt.qkv.middleCols(2 * d + h * hd, hd);
      for (std::size_t r = 0; r < l_all; ++r) {
        rope.rotate(r, q.row(r).data());
        rope.rotate(r, k.row(r).data());
      }
      RowMat<T>& p = bt.probs[static_cast<std::size_t>(h)];
      p = q * k.transpose() * scale;
      detail::softmax_rows(p);
      bt.attn_concat.middleCols(h * hd, hd) = p * v;
    }
    bt.attn_out = bt.attn_concat * weight(bi.out_w, d, d).transpose();
    bt.attn_out.rowwise() += bias(bi.out_b, d).transpose();
    for (std::size_t r = 0; r < l_all; ++r) {
      const int s = seq.is_reference[r] ? 0 : 1;
      x.row(r).array() += mod.row(s).segment(2 * d, d).array() * bt.attn_out.row(r).array();
    }

    bt.normed2 = detail::layer_norm(x, bt.inv_std2);
    RowMat<T> h2(l_all, d);
    for (std::size_t r = 0; r < l_all; ++r) {
      const int s = seq.is_reference[r] ? 0 : 1;
      h2.row(r).array() = bt.normed2.row(r).array() *
                              (mod.row(s).segment(4 * d, d).array() + T(1)) +
                          mod.row(s).segment(3 * d, d).array();
    }
    bt.mlp_pre = h2 * weight(bi.mlp_w1, 4 * d, d).transpose();
    bt.mlp_pre.rowwise() += bias(bi.mlp_b1, 4 * d).transpose();
    bt.mlp_act = bt.mlp_pre.unaryExpr([](T v) { return detail::silu(v); });
    bt.mlp_out = bt.mlp_act * weight(bi.mlp_w2, d, 4 * d).transpose();
    bt.mlp_out.rowwise() += bias(bi.mlp_b2, d).transpose();
    for (std::size_t r = 0; r < l_all; ++r) {
      const int s = seq.is_reference[r] ? 0 : 1;
      x.row(r).array() += mod.row(s).segment(5 * d, d).array() * bt.mlp_out.row(r).array();
    }
  }

  void block_backward(int b, const ConditioningSequence& seq, const RopeTable<T>& rope,
                      const Tape<T>& tape, RowMat<T>& dx, RowMat<T>& d_t_silu) const {
    const int d = cfg_.dim;
    const int hd = cfg_.head_dim;
    const std::size_t l_all = tape.n_tokens;
    const BlockIdx& bi = idx_.blocks[static_cast<std::size_t>(b)];
    const BlockTape<T>& bt = tape.blocks[static_cast<std::size_t>(b)];
    const RowMat<T>& mod = tape.block_mod[static_cast<std::size_t>(b)];
    RowMat<T> d_mod = RowMat<T>::Zero(2, 6 * d);

    // ---- MLP branch: x_out = x_mid + gate2 .* mlp_out ----
    RowMat<T> dmlp_out(l_all, d);
    for (std::size_t r = 0; r < l_all; ++r) {
      const int s = seq.is_reference[r] ? 0 : 1;
      dmlp_out.row(r).array() = dx.row(r).array() * mod.row(s).segment(5 * d, d).array();
      d_mod.row(s).segment(5 * d, d).array() +=
          dx.row(r).array() * bt.mlp_out.row(r).array();
    }
    grad_mat(bi.mlp_w2, d, 4 * d) += dmlp_out.transpose() * bt.mlp_act;
    grad_vec(bi.mlp_b2, d) += detail::ordered_colsum(dmlp_out);
    RowMat<T> dact = dmlp_out * weight(bi.mlp_w2, d, 4 * d);
    RowMat<T> dpre = dact.binaryExpr(
        bt.mlp_pre, [](T g, T u) { return g * detail::silu_grad(u); });
    // Recompute the modulated LN2 output (cheaper than saving it).
    RowMat<T> h2(l_all, d);
    for (std::size_t r = 0; r < l_all; ++r) {
      const int s = seq.is_reference[r] ? 0 : 1;
      h2.row(r).array() = bt.normed2.row(r).array() *
                              (mod.row(s).segment(4 * d, d).array() + T(1)) +
                          mod.row(s).segment(3 * d, d).array();
    }
    grad_mat(bi.mlp_w1, 4 * d, d) += dpre.transpose() * h2;
    grad_vec(bi.mlp_b1, 4 * d) += detail::ordered_colsum(dpre);
    RowMat<T> dh2 = dpre * weight(bi.mlp_w1, 4 * d, d);
    RowMat<T> dnormed2(l_all, d);
    for (std::size_t r = 0; r < l_all; ++r) {
      const int s = seq.is_reference[r] ? 0 : 1;
      dnormed2.row(r).array() = dh2.row(r).array() * (mod.row(s).segment(4 * d, d).array() + T(1));
      d_mod.row(s).segment(3 * d, d) += dh2.row(r);
      d_mod.row(s).segment(4 * d, d).array() +=
          dh2.row(r).array() * bt.normed2.row(r).array();
    }
    dx += detail::layer_norm_backward(dnormed2, bt.normed2, bt.inv_std2);

    // ---- attention branch: x_mid = x_in + gate1 .* attn_out ----
    RowMat<T> dattn_out(l_all, d);
    for (std::size_t r = 0; r < l_all; ++r) {
      const int s = seq.is_reference[r] ? 0 : 1;
      dattn_out.row(r).array() = dx.row(r).array() * mod.row(s).segment(2 * d, d).array();
      d_mod.row(s).segment(2 * d, d).array() +=
          dx.row(r).array() * bt.attn_out.row(r).array();
    }
    grad_mat(bi.out_w, d, d) += dattn_out.transpose() * bt.attn_concat;
    grad_vec(bi.out_b, d) += detail::ordered_colsum(dattn_out);
    RowMat<T> dconcat = dattn_out * weight(bi.out_w, d, d);

    RowMat<T> dqkv = RowMat<T>::Zero(l_all, 3 * d);
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    for (int h = 0; h < cfg_.heads; ++h) {
      RowMat<T> q = bt.qkv.middleCols(h * hd, hd);
      RowMat<T> k = bt.qkv.middleCols(d + h * hd, hd);
      const auto v = bt.qkv.middleCols(2 * d + h * hd, hd);
      for (std::size_t r = 0; r < l_all; ++r) {
        rope.rotate(r, q.row(r).data());
        rope.rotate(r, k.row(r).data());
      }
      const RowMat<T>& p = bt.probs[static_cast<std::size_t>(h)];
      const auto doh = dconcat.middleCols(h * hd, hd);
      RowMat<T> dp = doh * v.transpose();
      dqkv.middleCols(2 * d + h * hd, hd) += p.transpose() * doh;
      // Softmax backward: ds = p .* (dp - rowsum(dp .* p)).
      RowMat<T> ds(p.rows(), p.cols());
      for (Eigen::Index r = 0; r < p.rows(); ++r) {
        const T dot = dp.row(r).dot(p.row(r));
        ds.row(r) = p.row(r).array() * (dp.row(r).array() - dot);
      }
      RowMat<T> dq_rot = ds * k * scale;
      RowMat<T> dk_rot = ds.transpose() * q * scale;
      for (std::size_t r = 0; r < l_all; ++r) {
        rope.rotate_transpose(r, dq_rot.row(r).data());
        rope.rotate_transpose(r, dk_rot.row(r).data());
      }
      dqkv.middleCols(h * hd, hd) += dq_rot;
      dqkv.middleCols(d + h * hd, hd) += dk_rot;
    }

    RowMat<T> h1(l_all, d);
    for (std::size_t r = 0; r < l_all; ++r) {
      const int s = seq.is_reference[r] ? 0 : 1;
      h1.row(r).array() = bt.normed1.row(r).array() *
                              (mod.row(s).segment(d, d).array() + T(1)) +
                          mod.row(s).head(d).array();
    }
    grad_mat(bi.qkv_w, 3 * d, d) += dqkv.transpose() * h1;
    grad_vec(bi.qkv_b, 3 * d) += detail::ordered_colsum(dqkv);
    RowMat<T> dh1 = dqkv * weight(bi.qkv_w, 3 * d, d);
    RowMat<T> dnormed1(l_all, d);
    for (std::size_t r = 0; r < l_all; ++r) {
      const int s = seq.is_reference[r] ? 0 : 1;
      dnormed1.row(r).array() = dh1.row(r).array() * (mod.row(s).segment(d, d).array() + T(1));
      d_mod.row(s).head(d) += dh1.row(r);
      d_mod.row(s).segment(d, d).array() +=
          dh1.row(r).array() * bt.normed1.row(r).array();
    }
    dx += detail::layer_norm_backward(dnormed1, bt.normed1, bt.inv_std1);

    grad_mat(bi.ada_w, 6 * d, d) += d_mod.transpose() * tape.t_silu;
    grad_vec(bi.ada_b, 6 * d) += detail::ordered_colsum(d_mod);
    d_t_silu += d_mod * weight(bi.ada_w, 6 * d, d);
  }

  ModelConfig cfg_;
  RopeConfig rope_cfg_;
  ParamStore<T> params_;
  Idx idx_;
  mutable std::vector<T>* grads_ = nullptr;
};

/// Rectified-flow objective on target tokens: mean squared error between
/// the predicted velocity and `velocity_star` ([Lt, out_dim], row order
/// matching the sequence's target tokens). Optionally accumulates
/// parameter gradients.
template <typename T>
double rf_loss(const MiniDiT<T>& model, const ConditioningSequence& seq,
               const RowMat<T>& velocity_star, double t, bool drop_refs,
               std::vector<T>* grads = nullptr) {
  Tape<T> tape;
  const RowMat<T> pred = model.forward(seq, t, drop_refs, grads ? &tape : nullptr);
  if (pred.rows() != velocity_star.rows() || pred.cols() != velocity_star.cols()) {
    throw InvalidInput("rf_loss: velocity target shape mismatch");
  }
  const RowMat<T> diff = pred - velocity_star;
  const double count = static_cast<double>(diff.size());
  const double loss = static_cast<double>(diff.array().square().sum()) / count;
  if (grads) {
    const RowMat<T> dpred = diff * static_cast<T>(2.0 / count);
    model.backward(seq, tape, dpred, *grads);
  }
  return loss;
}

}  // namespace prox
