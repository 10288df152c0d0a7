// Central finite-difference check of block input gradients, plus random desk-scale parameters for
// exercising the blocks.
#ifndef GAZEFORGE_BLOCKS_GRADCHECK_HPP
#define GAZEFORGE_BLOCKS_GRADCHECK_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gazeforge/blocks/layers.hpp"
#include "gazeforge/blocks/modules.hpp"
#include "gazeforge/blocks/tensor.hpp"

namespace gazeforge::blocks {

using Tensor = Tensor4<double>;

/// A block viewed as a pure function of its input tensors, with its vector-Jacobian product.
struct BlockHandle {
  std::string name;
  std::function<Tensor(const std::vector<Tensor>&, KinkTrace*)> forward;
  std::function<std::vector<Tensor>(const std::vector<Tensor>&, const Tensor&)> backward;
};

struct GradCheckResult {
  double max_rel_error = 0;
  Eigen::Index checked = 0;
  Eigen::Index excluded = 0;  // coordinates whose step crossed a ReLU / max kink
};

inline constexpr double kGradcheckStep = 1e-4;
// Gradients below this magnitude are compared on an absolute scale.
inline constexpr double kGradcheckFloor = 1e-6;

/// Compares the analytic input gradient of sum(block(inputs)) against central differences.
inline GradCheckResult finite_diff_gradcheck(const BlockHandle& block, const std::vector<Tensor>& inputs,
                                             double h = kGradcheckStep) {
  KinkTrace base_trace;
  const Tensor out = block.forward(inputs, &base_trace);
  const Tensor ones = Tensor::constant(out.dims(), 1.0);
  const auto analytic = block.backward(inputs, ones);

  GradCheckResult result;
  std::vector<Tensor> probe = inputs;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (Eigen::Index i = 0; i < inputs[t].size(); ++i) {
      const double x0 = inputs[t].values()(i);
      KinkTrace plus_trace, minus_trace;
      probe[t].values()(i) = x0 + h;
      const Tensor plus = block.forward(probe, &plus_trace);
      probe[t].values()(i) = x0 - h;
      const Tensor minus = block.forward(probe, &minus_trace);
      probe[t].values()(i) = x0;
      if (plus_trace.pattern != base_trace.pattern || minus_trace.pattern != base_trace.pattern) {
        ++result.excluded;
        continue;
      }
      // Difference outputs before summing so untouched outputs cancel exactly.
      const double numeric = (plus.values() - minus.values()).sum() / (2 * h);
      const double a = analytic[t].values()(i);
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradcheckFloor});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(a - numeric) / denom);
      ++result.checked;
    }
  }
  return result;
}

inline BlockHandle conv2d_handle(ConvParams<double> p) {
  return {"conv2d",
          [p](const std::vector<Tensor>& in, KinkTrace*) { return conv2d(in.at(0), p); },
          [p](const std::vector<Tensor>& in, const Tensor& g) {
            return std::vector<Tensor>{conv2d_backward_input(g, p, in.at(0).dims())};
          }};
}

inline BlockHandle deconv2d_handle(ConvParams<double> p) {
  return {"deconv2d",
          [p](const std::vector<Tensor>& in, KinkTrace*) { return deconv2d(in.at(0), p); },
          [p](const std::vector<Tensor>& in, const Tensor& g) {
            return std::vector<Tensor>{deconv2d_backward_input(g, p, in.at(0).dims())};
          }};
}

inline BlockHandle am_handle(AttentionParams<double> p) {
  return {"attention_module",
          [p](const std::vector<Tensor>& in, KinkTrace*) { return am_forward(in.at(0), p); },
          [p](const std::vector<Tensor>& in, const Tensor& g) {
            AttentionCache<double> cache;
            am_forward(in.at(0), p, &cache);
            return std::vector<Tensor>{am_backward(g, in.at(0), p, cache)};
          }};
}

inline BlockHandle scse_handle(ScseParams<double> p) {
  return {"scse",
          [p](const std::vector<Tensor>& in, KinkTrace* trace) { return scse_forward(in.at(0), p, static_cast<ScseCache<double>*>(nullptr), trace); },
          [p](const std::vector<Tensor>& in, const Tensor& g) {
            ScseCache<double> cache;
            scse_forward(in.at(0), p, &cache);
            return std::vector<Tensor>{scse_backward(g, in.at(0), p, cache)};
          }};
}

inline BlockHandle br_handle(BoundaryRefinementParams<double> p) {
  return {"boundary_refinement",
          [p](const std::vector<Tensor>& in, KinkTrace* trace) { return br_forward(in.at(0), p, static_cast<BoundaryRefinementCache<double>*>(nullptr), trace); },
          [p](const std::vector<Tensor>& in, const Tensor& g) {
            BoundaryRefinementCache<double> cache;
            br_forward(in.at(0), p, &cache);
            return std::vector<Tensor>{br_backward(g, in.at(0), p, cache)};
          }};
}

inline BlockHandle decoder_handle(std::vector<DecoderBlockParams<double>> blocks, DecoderKind kind) {
  return {std::string("decoder_") + to_string(kind),
          [blocks, kind](const std::vector<Tensor>& in, KinkTrace* trace) {
            return decoder_forward(in, blocks, kind, static_cast<std::vector<DecoderBlockCache<double>>*>(nullptr), trace);
          },
          [blocks, kind](const std::vector<Tensor>& in, const Tensor& g) {
            std::vector<DecoderBlockCache<double>> caches;
            decoder_forward(in, blocks, kind, &caches);
            return decoder_backward(g, in.size(), blocks, caches);
          }};
}

// ---------------------------------------------------------------------------------------------
// Random parameters with uniform weights, used by the self tests and gradient checks.

template <typename Rng>
ConvParams<double> random_conv(Rng& rng, Eigen::Index out, Eigen::Index in, Eigen::Index k, int stride, int padding,
                               double scale = 0.5) {
  ConvParams<double> p;
  p.weight = Tensor::uniform({out, in, k, k}, rng, -scale, scale);
  std::uniform_real_distribution<double> u(-scale, scale);
  p.bias = Eigen::VectorXd::NullaryExpr(out, [&] { return u(rng); });
  p.stride = stride;
  p.padding = padding;
  return p;
}

template <typename Rng>
ConvParams<double> random_deconv(Rng& rng, Eigen::Index in, Eigen::Index out, double scale = 0.5) {
  auto p = random_conv(rng, in, out, 4, 2, 1, scale);
  std::uniform_real_distribution<double> u(-scale, scale);
  p.bias = Eigen::VectorXd::NullaryExpr(out, [&] { return u(rng); });
  return p;
}

template <typename Rng>
BatchNormParams<double> random_batch_norm(Rng& rng, Eigen::Index channels) {
  std::uniform_real_distribution<double> u(-0.5, 0.5), pos(0.5, 1.5);
  BatchNormParams<double> bn;
  bn.mean = Eigen::VectorXd::NullaryExpr(channels, [&] { return u(rng); });
  bn.variance = Eigen::VectorXd::NullaryExpr(channels, [&] { return pos(rng); });
  bn.scale = Eigen::VectorXd::NullaryExpr(channels, [&] { return pos(rng); });
  bn.shift = Eigen::VectorXd::NullaryExpr(channels, [&] { return u(rng); });
  bn.epsilon = 1e-5;
  return bn;
}

template <typename Rng>
AttentionParams<double> random_attention(Rng& rng, Eigen::Index channels) {
  return {random_conv(rng, channels, channels, 1, 1, 0, 1.0)};
}

template <typename Rng>
ScseParams<double> random_scse(Rng& rng, Eigen::Index channels, Eigen::Index reduction = 2) {
  const Eigen::Index reduced = std::max<Eigen::Index>(1, channels / reduction);
  return {random_conv(rng, reduced, channels, 1, 1, 0, 1.0), random_conv(rng, channels, reduced, 1, 1, 0, 1.0),
          random_conv(rng, 1, channels, 1, 1, 0, 1.0)};
}

template <typename Rng>
BoundaryRefinementParams<double> random_boundary_refinement(Rng& rng, Eigen::Index channels) {
  return {random_conv(rng, channels, channels, 3, 1, 1), random_conv(rng, channels, channels, 3, 1, 1)};
}

/// One decoder block mapping `in` channels (after skip concatenation) to `out` channels.
template <typename Rng>
DecoderBlockParams<double> random_decoder_block(Rng& rng, DecoderKind kind, Eigen::Index in, Eigen::Index mid,
                                                Eigen::Index out) {
  DecoderBlockParams<double> p;
  p.kind = kind;
  p.conv_in = random_conv(rng, mid, in, 3, 1, 1);
  p.bn_in = random_batch_norm(rng, mid);
  if (kind == DecoderKind::attention) {
    p.deconv = random_deconv(rng, mid, mid);
    p.bn_up = random_batch_norm(rng, mid);
    p.conv_out = random_conv(rng, out, mid, 1, 1, 0);
    p.bn_out = random_batch_norm(rng, out);
    p.attention = random_attention(rng, out);
  } else {
    p.deconv = random_deconv(rng, mid, out);
    p.scse = random_scse(rng, out);
  }
  return p;
}

/// Zeroes every kernel and bias and makes every batch norm the identity.
inline void zero_weights(DecoderBlockParams<double>& p) {
  auto zero = [](ConvParams<double>& c) {
    c.weight.values().setZero();
    c.bias.setZero();
  };
  auto ident = [](BatchNormParams<double>& bn) {
    if (bn.mean.size() > 0) bn = BatchNormParams<double>::identity(bn.mean.size());
  };
  zero(p.conv_in);
  zero(p.deconv);
  ident(p.bn_in);
  if (p.kind == DecoderKind::attention) {
    zero(p.conv_out);
    ident(p.bn_up);
    ident(p.bn_out);
    zero(p.attention.gate);
  } else {
    zero(p.scse.squeeze);
    zero(p.scse.excite);
    zero(p.scse.spatial);
  }
}

// ---------------------------------------------------------------------------------------------
// Randomized suite: every block type on `instances` random inputs and parameters.

struct SuiteEntry {
  std::string block;
  int instances = 0;
  double max_rel_error = 0;
  Eigen::Index checked = 0;
  Eigen::Index excluded = 0;
};

inline std::vector<SuiteEntry> gradcheck_suite(std::uint64_t seed, int instances, double h = kGradcheckStep) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % std::uint64_t(hi - lo + 1)); };
  using Make = std::function<std::pair<BlockHandle, std::vector<Tensor>>()>;
  const std::vector<std::pair<std::string, Make>> makers = {
      {"conv2d",
       [&] {
         const int k = 2 * pick(0, 1) + 1;
         const int stride = pick(1, 2), out = pick(1, 4), in = pick(1, 3);
         auto p = random_conv(rng, out, in, k, stride, k / 2);
         return std::pair{conv2d_handle(p), std::vector<Tensor>{Tensor::uniform({pick(1, 2), in, pick(3, 6), pick(3, 6)}, rng)}};
       }},
      {"deconv2d",
       [&] {
         const int in = pick(1, 3), out = pick(1, 3);
         auto p = random_deconv(rng, in, out);
         return std::pair{deconv2d_handle(p),
                          std::vector<Tensor>{Tensor::uniform({pick(1, 2), p.weight.batch(), pick(2, 4), pick(2, 4)}, rng)}};
       }},
      {"attention_module",
       [&] {
         const int c = pick(1, 4);
         return std::pair{am_handle(random_attention(rng, c)),
                          std::vector<Tensor>{Tensor::uniform({pick(1, 2), c, pick(2, 6), pick(2, 6)}, rng)}};
       }},
      {"scse",
       [&] {
         const int c = 2 * pick(1, 3);  // reduction 2 must divide the width
         return std::pair{scse_handle(random_scse(rng, c)),
                          std::vector<Tensor>{Tensor::uniform({pick(1, 2), c, pick(2, 5), pick(2, 5)}, rng)}};
       }},
      {"boundary_refinement",
       [&] {
         const int c = pick(1, 3);
         return std::pair{br_handle(random_boundary_refinement(rng, c)),
                          std::vector<Tensor>{Tensor::uniform({1, c, pick(3, 6), pick(3, 6)}, rng)}};
       }},
      {"decoder_AM",
       [&] {
         const int c = pick(1, 3), skip = pick(1, 2);
         std::vector<DecoderBlockParams<double>> blocks{random_decoder_block(rng, DecoderKind::attention, c, 3, 2),
                                                        random_decoder_block(rng, DecoderKind::attention, 2 + skip, 3, 2)};
         return std::pair{decoder_handle(blocks, DecoderKind::attention),
                          std::vector<Tensor>{Tensor::uniform({1, c, 2, 2}, rng), Tensor::uniform({1, skip, 4, 4}, rng)}};
       }},
      {"decoder_scSE",
       [&] {
         const int c = pick(1, 3), skip = pick(1, 2);
         std::vector<DecoderBlockParams<double>> blocks{random_decoder_block(rng, DecoderKind::scse, c, 3, 2),
                                                        random_decoder_block(rng, DecoderKind::scse, 2 + skip, 3, 2)};
         return std::pair{decoder_handle(blocks, DecoderKind::scse),
                          std::vector<Tensor>{Tensor::uniform({1, c, 2, 2}, rng), Tensor::uniform({1, skip, 4, 4}, rng)}};
       }},
  };
  std::vector<SuiteEntry> out;
  for (const auto& [name, make] : makers) {
    SuiteEntry e;
    e.block = name;
    for (int i = 0; i < instances; ++i) {
      const auto [handle, inputs] = make();
      const auto r = finite_diff_gradcheck(handle, inputs, h);
      e.max_rel_error = std::max(e.max_rel_error, r.max_rel_error);
      e.checked += r.checked;
      e.excluded += r.excluded;
      ++e.instances;
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace gazeforge::blocks

#endif  // GAZEFORGE_BLOCKS_GRADCHECK_HPP
