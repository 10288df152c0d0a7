// Reference forward/backward passes for the attention module, scSE gating, boundary refinement and
// the two decoder block kinds. Batch norm always runs in inference mode with supplied statistics.
#ifndef GAZEFORGE_BLOCKS_MODULES_HPP
#define GAZEFORGE_BLOCKS_MODULES_HPP

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "gazeforge/blocks/layers.hpp"
#include "gazeforge/blocks/tensor.hpp"
#include "gazeforge/error.hpp"

namespace gazeforge::blocks {

namespace detail {
template <typename Scalar>
void require_kernel(const ConvParams<Scalar>& p, Eigen::Index out, Eigen::Index in, Eigen::Index k,
                    const std::string& what) {
  const auto& d = p.weight.dims();
  if (d[0] != out || d[1] != in || d[2] != k || d[3] != k) {
    throw Error(ErrorCode::shape, what + ": expected kernel " + dims_string({out, in, k, k}) + ", got " + dims_string(d));
  }
}

template <typename Scalar>
void require_same_padding(const ConvParams<Scalar>& p, const std::string& what) {
  if (p.weight.height() % 2 == 0 || p.weight.height() != p.weight.width() || p.stride != 1 ||
      p.padding != p.weight.height() / 2) {
    throw Error(ErrorCode::shape, what + ": kernel must be odd and square with stride 1 and 'same' padding");
  }
}

// Multiplies each (n, c) plane by gate(n, c).
template <typename Scalar>
Tensor4<Scalar> channel_scale(const Tensor4<Scalar>& x, const Tensor4<Scalar>& gate) {
  Tensor4<Scalar> y = x;
  for (Eigen::Index n = 0; n < x.batch(); ++n)
    for (Eigen::Index c = 0; c < x.channels(); ++c) y.plane(n, c) *= gate(n, c, 0, 0);
  return y;
}

// sum over pixels of a * b per (n, c): the gradient of a per-channel gate.
template <typename Scalar>
Tensor4<Scalar> channel_dot(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b) {
  Tensor4<Scalar> g(a.batch(), a.channels(), 1, 1);
  for (Eigen::Index n = 0; n < a.batch(); ++n)
    for (Eigen::Index c = 0; c < a.channels(); ++c) g(n, c, 0, 0) = a.plane(n, c).dot(b.plane(n, c));
  return g;
}

template <typename Scalar>
Tensor4<Scalar> sigmoid_backward(const Tensor4<Scalar>& grad_out, const Tensor4<Scalar>& sig) {
  Tensor4<Scalar> g = grad_out;
  g.values() = (grad_out.values().array() * sig.values().array() * (Scalar(1) - sig.values().array())).matrix();
  return g;
}
}  // namespace detail

// ---------------------------------------------------------------------------------------------
// Attention module: y = x * sigmoid(conv1x1(global_avg_pool(x))), one gate per channel.

template <typename Scalar = double>
struct AttentionParams {
  ConvParams<Scalar> gate;  // (C, C, 1, 1)
};

template <typename Scalar>
struct AttentionCache {
  Tensor4<Scalar> gate;  // (N, C, 1, 1), after the sigmoid
};

template <typename Scalar>
void validate(const AttentionParams<Scalar>& p, Eigen::Index channels) {
  detail::require_kernel(p.gate, channels, channels, 1, "attention module");
}

template <typename Scalar>
Tensor4<Scalar> am_forward(const Tensor4<Scalar>& x, const AttentionParams<Scalar>& p,
                           AttentionCache<Scalar>* cache = nullptr) {
  validate(p, x.channels());
  auto gate = sigmoid(conv2d(global_avg_pool(x), p.gate));
  auto y = detail::channel_scale(x, gate);
  if (cache) cache->gate = std::move(gate);
  return y;
}

template <typename Scalar>
Tensor4<Scalar> am_backward(const Tensor4<Scalar>& grad_out, const Tensor4<Scalar>& x, const AttentionParams<Scalar>& p,
                            const AttentionCache<Scalar>& cache) {
  Tensor4<Scalar> gx = detail::channel_scale(grad_out, cache.gate);
  const auto g_gate = detail::sigmoid_backward(detail::channel_dot(grad_out, x), cache.gate);
  const auto g_pool = conv2d_backward_input(g_gate, p.gate, {x.batch(), x.channels(), 1, 1});
  gx.values() += global_avg_pool_backward(g_pool, x.dims()).values();
  return gx;
}

// ---------------------------------------------------------------------------------------------
// Concurrent spatial and channel squeeze-excitation.
//   channel gate: sigmoid(excite(relu(squeeze(pool(x)))))   one per channel
//   spatial gate: sigmoid(spatial(x))                        one per pixel
// The two gated tensors are fused by elementwise maximum (see scse_fuse).

template <typename Scalar = double>
struct ScseParams {
  ConvParams<Scalar> squeeze;  // (C/r, C, 1, 1)
  ConvParams<Scalar> excite;   // (C, C/r, 1, 1)
  ConvParams<Scalar> spatial;  // (1, C, 1, 1)
};

template <typename Scalar>
struct ScseCache {
  Tensor4<Scalar> squeeze_pre;   // (N, C/r, 1, 1) before ReLU
  Tensor4<Scalar> channel_gate;  // (N, C, 1, 1)
  Tensor4<Scalar> spatial_gate;  // (N, 1, H, W)
  Tensor4<Scalar> pick_channel;  // 1 where the channel-gated branch won the max
};

template <typename Scalar>
void validate(const ScseParams<Scalar>& p, Eigen::Index channels) {
  const Eigen::Index reduced = p.squeeze.weight.batch();
  if (reduced < 1 || channels % reduced != 0) {
    throw Error(ErrorCode::shape, "scSE: reduced width " + std::to_string(reduced) + " must divide " +
                                      std::to_string(channels) + " channels");
  }
  detail::require_kernel(p.squeeze, reduced, channels, 1, "scSE squeeze");
  detail::require_kernel(p.excite, channels, reduced, 1, "scSE excite");
  detail::require_kernel(p.spatial, 1, channels, 1, "scSE spatial");
}

/// Fusion of the channel-gated and spatially-gated tensors. Returns true where `a` is selected.
template <typename Scalar>
bool scse_fuse(Scalar a, Scalar b, Scalar& out) {
  const bool pick_a = a >= b;
  out = pick_a ? a : b;
  return pick_a;
}

template <typename Scalar>
Tensor4<Scalar> scse_forward(const Tensor4<Scalar>& x, const ScseParams<Scalar>& p, ScseCache<Scalar>* cache = nullptr,
                             KinkTrace* trace = nullptr) {
  validate(p, x.channels());
  const auto squeeze_pre = conv2d(global_avg_pool(x), p.squeeze);
  const auto channel_gate = sigmoid(conv2d(relu(squeeze_pre, trace), p.excite));
  const auto spatial_gate = sigmoid(conv2d(x, p.spatial));

  Tensor4<Scalar> y(x.dims());
  Tensor4<Scalar> pick(x.dims());
  for (Eigen::Index n = 0; n < x.batch(); ++n)
    for (Eigen::Index c = 0; c < x.channels(); ++c)
      for (Eigen::Index h = 0; h < x.height(); ++h)
        for (Eigen::Index w = 0; w < x.width(); ++w) {
          const Scalar v = x(n, c, h, w);
          const bool a = scse_fuse(v * channel_gate(n, c, 0, 0), v * spatial_gate(n, 0, h, w), y(n, c, h, w));
          pick(n, c, h, w) = a ? Scalar(1) : Scalar(0);
          if (trace) trace->record(a);
        }
  if (cache) *cache = {squeeze_pre, channel_gate, spatial_gate, std::move(pick)};
  return y;
}

template <typename Scalar>
Tensor4<Scalar> scse_backward(const Tensor4<Scalar>& grad_out, const Tensor4<Scalar>& x, const ScseParams<Scalar>& p,
                              const ScseCache<Scalar>& cache) {
  Tensor4<Scalar> g_chan = grad_out, g_spat = grad_out;
  g_chan.values().array() *= cache.pick_channel.values().array();
  g_spat.values().array() *= (Scalar(1) - cache.pick_channel.values().array());

  // Direct paths through both gates.
  Tensor4<Scalar> gx = detail::channel_scale(g_chan, cache.channel_gate);
  Tensor4<Scalar> g_spatial_gate(x.batch(), 1, x.height(), x.width());
  for (Eigen::Index n = 0; n < x.batch(); ++n)
    for (Eigen::Index c = 0; c < x.channels(); ++c) {
      gx.plane(n, c).array() += g_spat.plane(n, c).array() * cache.spatial_gate.plane(n, 0).array();
      g_spatial_gate.plane(n, 0).array() += g_spat.plane(n, c).array() * x.plane(n, c).array();
    }

  // Channel gate depends on x through the pooled squeeze-excite path.
  const auto g_excite = detail::sigmoid_backward(detail::channel_dot(g_chan, x), cache.channel_gate);
  const auto g_hidden = conv2d_backward_input(g_excite, p.excite, cache.squeeze_pre.dims());
  const auto g_pool =
      conv2d_backward_input(relu_backward(g_hidden, cache.squeeze_pre), p.squeeze, {x.batch(), x.channels(), 1, 1});
  gx.values() += global_avg_pool_backward(g_pool, x.dims()).values();

  // Spatial gate depends on x through the 1x1 projection.
  const auto g_proj = detail::sigmoid_backward(g_spatial_gate, cache.spatial_gate);
  gx.values() += conv2d_backward_input(g_proj, p.spatial, x.dims()).values();
  return gx;
}

// ---------------------------------------------------------------------------------------------
// Boundary refinement: y = x + conv(relu(conv(x))), both convolutions shape preserving.

template <typename Scalar = double>
struct BoundaryRefinementParams {
  ConvParams<Scalar> first;
  ConvParams<Scalar> second;
};

template <typename Scalar>
struct BoundaryRefinementCache {
  Tensor4<Scalar> first_pre;
};

template <typename Scalar>
void validate(const BoundaryRefinementParams<Scalar>& p, Eigen::Index channels) {
  detail::require_kernel(p.first, channels, channels, p.first.weight.height(), "boundary refinement");
  detail::require_kernel(p.second, channels, channels, p.second.weight.height(), "boundary refinement");
  detail::require_same_padding(p.first, "boundary refinement");
  detail::require_same_padding(p.second, "boundary refinement");
}

/// Residual branch alone, without the skip.
template <typename Scalar>
Tensor4<Scalar> br_branch(const Tensor4<Scalar>& x, const BoundaryRefinementParams<Scalar>& p,
                          BoundaryRefinementCache<Scalar>* cache = nullptr, KinkTrace* trace = nullptr) {
  validate(p, x.channels());
  auto pre = conv2d(x, p.first);
  auto out = conv2d(relu(pre, trace), p.second);
  if (cache) cache->first_pre = std::move(pre);
  return out;
}

template <typename Scalar>
Tensor4<Scalar> br_forward(const Tensor4<Scalar>& x, const BoundaryRefinementParams<Scalar>& p,
                           BoundaryRefinementCache<Scalar>* cache = nullptr, KinkTrace* trace = nullptr) {
  Tensor4<Scalar> y = br_branch(x, p, cache, trace);
  y.values() += x.values();
  return y;
}

template <typename Scalar>
Tensor4<Scalar> br_backward(const Tensor4<Scalar>& grad_out, const Tensor4<Scalar>& x,
                            const BoundaryRefinementParams<Scalar>& p, const BoundaryRefinementCache<Scalar>& cache) {
  const auto g_mid = conv2d_backward_input(grad_out, p.second, cache.first_pre.dims());
  Tensor4<Scalar> gx = conv2d_backward_input(relu_backward(g_mid, cache.first_pre), p.first, x.dims());
  gx.values() += grad_out.values();
  return gx;
}

// ---------------------------------------------------------------------------------------------
// Decoder blocks. Each block concatenates its encoder skip (when given) onto its input, then
//   AM kind:   conv -> BN -> ReLU -> deconv 4x4/2 -> BN -> ReLU -> conv -> BN -> ReLU -> AM
//   scSE kind: conv -> BN -> ReLU -> deconv 4x4/2 -> scSE
// so every block doubles the spatial size.

enum class DecoderKind { attention, scse };

inline const char* to_string(DecoderKind k) { return k == DecoderKind::attention ? "AM" : "scSE"; }

template <typename Scalar = double>
struct DecoderBlockParams {
  DecoderKind kind = DecoderKind::attention;
  ConvParams<Scalar> conv_in;
  BatchNormParams<Scalar> bn_in;
  ConvParams<Scalar> deconv;  // (C_mid, C_up, 4, 4), stride 2, padding 1
  BatchNormParams<Scalar> bn_up;     // attention kind only
  ConvParams<Scalar> conv_out;       // attention kind only
  BatchNormParams<Scalar> bn_out;    // attention kind only
  AttentionParams<Scalar> attention;  // attention kind only
  ScseParams<Scalar> scse;            // scSE kind only

  Eigen::Index in_channels() const { return conv_in.weight.channels(); }
  Eigen::Index out_channels() const {
    return kind == DecoderKind::attention ? conv_out.weight.batch() : deconv.weight.channels();
  }
};

template <typename Scalar>
struct DecoderBlockCache {
  Tensor4<Scalar> input;  // after skip concatenation
  Eigen::Index prev_channels = 0;
  Tensor4<Scalar> in_pre, in_act;    // conv_in+BN output before ReLU / after
  Tensor4<Scalar> up_pre, up_act;    // deconv (+BN) before ReLU / after
  Tensor4<Scalar> out_pre, out_act;  // conv_out+BN before ReLU / after
  AttentionCache<Scalar> attention;
  ScseCache<Scalar> scse;
};

template <typename Scalar>
void validate(const DecoderBlockParams<Scalar>& p) {
  const auto& d = p.deconv.weight.dims();
  if (d[2] != 4 || d[3] != 4 || p.deconv.stride != 2 || p.deconv.padding != 1) {
    throw Error(ErrorCode::shape, "decoder: deconv must be 4x4 with stride 2 and padding 1");
  }
  if (d[0] != p.conv_in.weight.batch()) throw Error(ErrorCode::shape, "decoder: deconv input width mismatch");
  detail::require_same_padding(p.conv_in, "decoder conv_in");
  if (p.kind == DecoderKind::attention) {
    detail::require_same_padding(p.conv_out, "decoder conv_out");
    if (p.conv_out.weight.channels() != d[1]) throw Error(ErrorCode::shape, "decoder: conv_out width mismatch");
  }
}

template <typename Scalar>
Tensor4<Scalar> decoder_block_forward(const Tensor4<Scalar>& prev, const Tensor4<Scalar>* skip,
                                      const DecoderBlockParams<Scalar>& p, DecoderBlockCache<Scalar>* cache = nullptr,
                                      KinkTrace* trace = nullptr) {
  validate(p);
  DecoderBlockCache<Scalar> local;
  DecoderBlockCache<Scalar>& c = cache ? *cache : local;
  c.prev_channels = prev.channels();
  c.input = skip ? concat_channels(prev, *skip) : prev;
  if (c.input.channels() != p.in_channels()) {
    throw Error(ErrorCode::shape, "decoder: block expects " + std::to_string(p.in_channels()) +
                                      " input channels after skip concatenation, got " +
                                      std::to_string(c.input.channels()) + " (dims " + dims_string(c.input.dims()) + ")");
  }
  c.in_pre = batch_norm(conv2d(c.input, p.conv_in), p.bn_in);
  c.in_act = relu(c.in_pre, trace);
  if (p.kind == DecoderKind::attention) {
    c.up_pre = batch_norm(deconv2d(c.in_act, p.deconv), p.bn_up);
    c.up_act = relu(c.up_pre, trace);
    c.out_pre = batch_norm(conv2d(c.up_act, p.conv_out), p.bn_out);
    c.out_act = relu(c.out_pre, trace);
    return am_forward(c.out_act, p.attention, &c.attention);
  }
  c.up_act = deconv2d(c.in_act, p.deconv);
  return scse_forward(c.up_act, p.scse, &c.scse, trace);
}

/// Returns (gradient w.r.t. prev, gradient w.r.t. skip); the latter is empty without a skip.
template <typename Scalar>
std::pair<Tensor4<Scalar>, Tensor4<Scalar>> decoder_block_backward(const Tensor4<Scalar>& grad_out,
                                                                   const DecoderBlockParams<Scalar>& p,
                                                                   const DecoderBlockCache<Scalar>& c) {
  Tensor4<Scalar> g_up;
  if (p.kind == DecoderKind::attention) {
    auto g = am_backward(grad_out, c.out_act, p.attention, c.attention);
    g = batch_norm_backward(relu_backward(g, c.out_pre), p.bn_out);
    g = conv2d_backward_input(g, p.conv_out, c.up_act.dims());
    g_up = batch_norm_backward(relu_backward(g, c.up_pre), p.bn_up);
  } else {
    g_up = scse_backward(grad_out, c.up_act, p.scse, c.scse);
  }
  auto g = deconv2d_backward_input(g_up, p.deconv, c.in_act.dims());
  g = batch_norm_backward(relu_backward(g, c.in_pre), p.bn_in);
  g = conv2d_backward_input(g, p.conv_in, c.input.dims());
  if (c.input.channels() == c.prev_channels) return {std::move(g), Tensor4<Scalar>{}};
  return split_channels(g, c.prev_channels);
}

/// Runs a stack of decoder blocks. features[0] feeds the first block; features[i] (i >= 1), when
/// present, is the encoder skip concatenated onto the input of block i.
template <typename Scalar>
Tensor4<Scalar> decoder_forward(const std::vector<Tensor4<Scalar>>& features,
                                const std::vector<DecoderBlockParams<Scalar>>& blocks, DecoderKind kind,
                                std::vector<DecoderBlockCache<Scalar>>* caches = nullptr, KinkTrace* trace = nullptr) {
  if (features.empty()) throw Error(ErrorCode::empty, "decoder: no input features");
  if (blocks.empty()) throw Error(ErrorCode::empty, "decoder: no blocks");
  if (features.size() > blocks.size()) {
    throw Error(ErrorCode::shape, "decoder: " + std::to_string(features.size() - 1) + " skips for " +
                                      std::to_string(blocks.size()) + " blocks");
  }
  if (caches) caches->assign(blocks.size(), {});
  Tensor4<Scalar> x = features[0];
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].kind != kind) throw Error(ErrorCode::parameter, "decoder: block kind mismatch");
    const Tensor4<Scalar>* skip = (i > 0 && i < features.size()) ? &features[i] : nullptr;
    if (skip && (skip->height() != x.height() || skip->width() != x.width() || skip->batch() != x.batch())) {
      throw Error(ErrorCode::shape, "decoder: skip " + std::to_string(i) + " must be " + std::to_string(x.batch()) +
                                        "xCx" + std::to_string(x.height()) + "x" + std::to_string(x.width()) +
                                        ", got " + dims_string(skip->dims()));
    }
    x = decoder_block_forward(x, skip, blocks[i], caches ? &(*caches)[i] : nullptr, trace);
  }
  return x;
}

/// Gradients of sum(grad_out * output) with respect to every entry of `features`.
template <typename Scalar>
std::vector<Tensor4<Scalar>> decoder_backward(const Tensor4<Scalar>& grad_out, std::size_t n_features,
                                              const std::vector<DecoderBlockParams<Scalar>>& blocks,
                                              const std::vector<DecoderBlockCache<Scalar>>& caches) {
  std::vector<Tensor4<Scalar>> grads(n_features);
  Tensor4<Scalar> g = grad_out;
  for (std::size_t i = blocks.size(); i-- > 0;) {
    auto [g_prev, g_skip] = decoder_block_backward(g, blocks[i], caches[i]);
    if (i > 0 && i < n_features) grads[i] = std::move(g_skip);
    g = std::move(g_prev);
  }
  grads[0] = std::move(g);
  return grads;
}

}  // namespace gazeforge::blocks

#endif  // GAZEFORGE_BLOCKS_MODULES_HPP
