// Naive reference layers with input gradients: convolution, transposed convolution, inference
// batch norm, pointwise nonlinearities, global pooling and channel concatenation.
#ifndef GAZEFORGE_BLOCKS_LAYERS_HPP
#define GAZEFORGE_BLOCKS_LAYERS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gazeforge/blocks/tensor.hpp"
#include "gazeforge/error.hpp"

namespace gazeforge::blocks {

/// Records piecewise-linear branch decisions (ReLU sign, max selection) so a gradient check can
/// tell when a finite-difference step crossed a kink.
struct KinkTrace {
  std::vector<char> pattern;
  void record(bool branch) { pattern.push_back(branch ? 1 : 0); }
};

template <typename Scalar = double>
struct ConvParams {
  Tensor4<Scalar> weight;  // conv: (out, in, kh, kw); transposed conv: (in, out, kh, kw)
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;  // empty means no bias
  int stride = 1;
  int padding = 0;
};

template <typename Scalar = double>
struct BatchNormParams {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean, variance, scale, shift;
  Scalar epsilon = Scalar(1e-5);

  static BatchNormParams identity(Eigen::Index channels) {
    using V = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    return {V::Zero(channels), V::Ones(channels), V::Ones(channels), V::Zero(channels), Scalar(0)};
  }
};

inline Eigen::Index conv_output_size(Eigen::Index in, Eigen::Index k, int stride, int padding) {
  return (in + 2 * padding - k) / stride + 1;
}
inline Eigen::Index transposed_output_size(Eigen::Index in, Eigen::Index k, int stride, int padding) {
  return (in - 1) * stride - 2 * padding + k;
}

namespace detail {

template <typename Scalar>
void check_conv(const Tensor4<Scalar>& x, const ConvParams<Scalar>& p, Eigen::Index in_channels_axis,
                const char* what) {
  const auto& w = p.weight;
  if (p.stride < 1 || p.padding < 0) throw Error(ErrorCode::parameter, std::string(what) + ": bad stride/padding");
  const Eigen::Index expected_in = in_channels_axis == 1 ? w.channels() : w.batch();
  if (x.channels() != expected_in) {
    throw Error(ErrorCode::shape, std::string(what) + ": input has " + std::to_string(x.channels()) +
                                      " channels, kernel expects " + std::to_string(expected_in));
  }
  const Eigen::Index out_channels = in_channels_axis == 1 ? w.batch() : w.channels();
  if (p.bias.size() != 0 && p.bias.size() != out_channels) {
    throw Error(ErrorCode::shape, std::string(what) + ": bias length does not match output channels");
  }
}

// y[n, co, oy, ox] = sum x[n, ci, oy*s - p + ky, ox*s - p + kx] * w[co, ci, ky, kx]
template <typename Scalar>
Tensor4<Scalar> gather_conv(const Tensor4<Scalar>& x, const Tensor4<Scalar>& w, int stride, int padding,
                            Eigen::Index out_h, Eigen::Index out_w) {
  const Eigen::Index co_n = w.batch(), ci_n = w.channels(), kh = w.height(), kw = w.width();
  Tensor4<Scalar> y(x.batch(), co_n, out_h, out_w);
  for (Eigen::Index n = 0; n < x.batch(); ++n)
    for (Eigen::Index co = 0; co < co_n; ++co)
      for (Eigen::Index oy = 0; oy < out_h; ++oy)
        for (Eigen::Index ox = 0; ox < out_w; ++ox) {
          Scalar acc = 0;
          for (Eigen::Index ci = 0; ci < ci_n; ++ci)
            for (Eigen::Index ky = 0; ky < kh; ++ky) {
              const Eigen::Index iy = oy * stride - padding + ky;
              if (iy < 0 || iy >= x.height()) continue;
              for (Eigen::Index kx = 0; kx < kw; ++kx) {
                const Eigen::Index ix = ox * stride - padding + kx;
                if (ix < 0 || ix >= x.width()) continue;
                acc += x(n, ci, iy, ix) * w(co, ci, ky, kx);
              }
            }
          y(n, co, oy, ox) = acc;
        }
  return y;
}

// y[n, co, iy*s - p + ky, ix*s - p + kx] += x[n, ci, iy, ix] * w[ci, co, ky, kx]
template <typename Scalar>
Tensor4<Scalar> scatter_conv(const Tensor4<Scalar>& x, const Tensor4<Scalar>& w, int stride, int padding,
                             Eigen::Index out_h, Eigen::Index out_w) {
  const Eigen::Index ci_n = w.batch(), co_n = w.channels(), kh = w.height(), kw = w.width();
  Tensor4<Scalar> y(x.batch(), co_n, out_h, out_w);
  for (Eigen::Index n = 0; n < x.batch(); ++n)
    for (Eigen::Index ci = 0; ci < ci_n; ++ci)
      for (Eigen::Index iy = 0; iy < x.height(); ++iy)
        for (Eigen::Index ix = 0; ix < x.width(); ++ix) {
          const Scalar v = x(n, ci, iy, ix);
          for (Eigen::Index co = 0; co < co_n; ++co)
            for (Eigen::Index ky = 0; ky < kh; ++ky) {
              const Eigen::Index oy = iy * stride - padding + ky;
              if (oy < 0 || oy >= out_h) continue;
              for (Eigen::Index kx = 0; kx < kw; ++kx) {
                const Eigen::Index ox = ix * stride - padding + kx;
                if (ox < 0 || ox >= out_w) continue;
                y(n, co, oy, ox) += v * w(ci, co, ky, kx);
              }
            }
        }
  return y;
}

template <typename Scalar>
void add_bias(Tensor4<Scalar>& y, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& bias) {
  if (bias.size() == 0) return;
  for (Eigen::Index n = 0; n < y.batch(); ++n)
    for (Eigen::Index c = 0; c < y.channels(); ++c) y.plane(n, c).array() += bias(c);
}

}  // namespace detail

/// Direct cross-correlation.
template <typename Scalar>
Tensor4<Scalar> conv2d(const Tensor4<Scalar>& x, const ConvParams<Scalar>& p) {
  detail::check_conv(x, p, 1, "conv2d");
  const Eigen::Index kh = p.weight.height(), kw = p.weight.width();
  if (kh > x.height() + 2 * p.padding || kw > x.width() + 2 * p.padding) {
    throw Error(ErrorCode::shape, "conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                                      " larger than padded input");
  }
  auto y = detail::gather_conv(x, p.weight, p.stride, p.padding, conv_output_size(x.height(), kh, p.stride, p.padding),
                               conv_output_size(x.width(), kw, p.stride, p.padding));
  detail::add_bias(y, p.bias);
  return y;
}

/// Input gradient of conv2d: scatters grad_out back through the kernel.
template <typename Scalar>
Tensor4<Scalar> conv2d_backward_input(const Tensor4<Scalar>& grad_out, const ConvParams<Scalar>& p,
                                      const typename Tensor4<Scalar>::Dims& input_dims) {
  return detail::scatter_conv(grad_out, p.weight, p.stride, p.padding, input_dims[2], input_dims[3]);
}

/// Transposed convolution with weight layout (in, out, kh, kw).
template <typename Scalar>
Tensor4<Scalar> deconv2d(const Tensor4<Scalar>& x, const ConvParams<Scalar>& p) {
  detail::check_conv(x, p, 0, "deconv2d");
  const Eigen::Index out_h = transposed_output_size(x.height(), p.weight.height(), p.stride, p.padding);
  const Eigen::Index out_w = transposed_output_size(x.width(), p.weight.width(), p.stride, p.padding);
  if (out_h < 1 || out_w < 1) throw Error(ErrorCode::shape, "deconv2d: padding leaves an empty output");
  auto y = detail::scatter_conv(x, p.weight, p.stride, p.padding, out_h, out_w);
  detail::add_bias(y, p.bias);
  return y;
}

/// Input gradient of deconv2d: a plain cross-correlation with the same kernel.
template <typename Scalar>
Tensor4<Scalar> deconv2d_backward_input(const Tensor4<Scalar>& grad_out, const ConvParams<Scalar>& p,
                                        const typename Tensor4<Scalar>::Dims& input_dims) {
  // gather_conv indexes w(co, ci) where co runs over its output; here that is the deconv input axis.
  return detail::gather_conv(grad_out, p.weight, p.stride, p.padding, input_dims[2], input_dims[3]);
}

/// Per-channel affine factor of inference-mode batch norm.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bn_gain(const BatchNormParams<Scalar>& bn) {
  return (bn.scale.array() / (bn.variance.array() + bn.epsilon).sqrt()).matrix();
}

template <typename Scalar>
Tensor4<Scalar> batch_norm(const Tensor4<Scalar>& x, const BatchNormParams<Scalar>& bn) {
  if (bn.mean.size() != x.channels() || bn.variance.size() != x.channels() || bn.scale.size() != x.channels() ||
      bn.shift.size() != x.channels()) {
    throw Error(ErrorCode::shape, "batch_norm: statistics do not match " + std::to_string(x.channels()) + " channels");
  }
  if ((bn.variance.array() + bn.epsilon <= Scalar(0)).any()) {
    throw Error(ErrorCode::domain, "batch_norm: variance must be positive");
  }
  const auto gain = bn_gain(bn);
  Tensor4<Scalar> y = x;
  for (Eigen::Index n = 0; n < x.batch(); ++n)
    for (Eigen::Index c = 0; c < x.channels(); ++c)
      y.plane(n, c) = ((x.plane(n, c).array() - bn.mean(c)) * gain(c) + bn.shift(c)).matrix();
  return y;
}

template <typename Scalar>
Tensor4<Scalar> batch_norm_backward(const Tensor4<Scalar>& grad_out, const BatchNormParams<Scalar>& bn) {
  const auto gain = bn_gain(bn);
  Tensor4<Scalar> g = grad_out;
  for (Eigen::Index n = 0; n < g.batch(); ++n)
    for (Eigen::Index c = 0; c < g.channels(); ++c) g.plane(n, c) *= gain(c);
  return g;
}

template <typename Scalar>
Tensor4<Scalar> relu(const Tensor4<Scalar>& x, KinkTrace* trace = nullptr) {
  Tensor4<Scalar> y = x;
  y.values() = x.values().cwiseMax(Scalar(0));
  if (trace) {
    for (Eigen::Index i = 0; i < x.size(); ++i) trace->record(x.values()(i) > Scalar(0));
  }
  return y;
}

/// ReLU gradient given the pre-activation input.
template <typename Scalar>
Tensor4<Scalar> relu_backward(const Tensor4<Scalar>& grad_out, const Tensor4<Scalar>& pre) {
  Tensor4<Scalar> g = grad_out;
  g.values() = (pre.values().array() > Scalar(0)).select(grad_out.values(), Scalar(0));
  return g;
}

template <typename Scalar>
Scalar sigmoid(Scalar v) {
  return Scalar(1) / (Scalar(1) + std::exp(-v));
}

template <typename Scalar>
Tensor4<Scalar> sigmoid(const Tensor4<Scalar>& x) {
  Tensor4<Scalar> y = x;
  y.values() = x.values().unaryExpr([](Scalar v) { return sigmoid(v); });
  return y;
}

/// (N, C, H, W) -> (N, C, 1, 1) spatial mean.
template <typename Scalar>
Tensor4<Scalar> global_avg_pool(const Tensor4<Scalar>& x) {
  Tensor4<Scalar> y(x.batch(), x.channels(), 1, 1);
  for (Eigen::Index n = 0; n < x.batch(); ++n)
    for (Eigen::Index c = 0; c < x.channels(); ++c) y(n, c, 0, 0) = x.plane(n, c).mean();
  return y;
}

template <typename Scalar>
Tensor4<Scalar> global_avg_pool_backward(const Tensor4<Scalar>& grad_out, const typename Tensor4<Scalar>::Dims& dims) {
  Tensor4<Scalar> g(dims);
  const Scalar inv = Scalar(1) / Scalar(dims[2] * dims[3]);
  for (Eigen::Index n = 0; n < dims[0]; ++n)
    for (Eigen::Index c = 0; c < dims[1]; ++c) g.plane(n, c).setConstant(grad_out(n, c, 0, 0) * inv);
  return g;
}

template <typename Scalar>
Tensor4<Scalar> concat_channels(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b) {
  if (a.batch() != b.batch() || a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorCode::shape, "concat: expected skip of dims " + std::to_string(a.batch()) + "xCx" +
                                      std::to_string(a.height()) + "x" + std::to_string(a.width()) + ", got " +
                                      dims_string(b.dims()));
  }
  Tensor4<Scalar> y(a.batch(), a.channels() + b.channels(), a.height(), a.width());
  for (Eigen::Index n = 0; n < a.batch(); ++n) {
    for (Eigen::Index c = 0; c < a.channels(); ++c) y.plane(n, c) = a.plane(n, c);
    for (Eigen::Index c = 0; c < b.channels(); ++c) y.plane(n, a.channels() + c) = b.plane(n, c);
  }
  return y;
}

/// Splits a channel-concatenated gradient back into its two parts.
template <typename Scalar>
std::pair<Tensor4<Scalar>, Tensor4<Scalar>> split_channels(const Tensor4<Scalar>& g, Eigen::Index first) {
  Tensor4<Scalar> a(g.batch(), first, g.height(), g.width());
  Tensor4<Scalar> b(g.batch(), g.channels() - first, g.height(), g.width());
  for (Eigen::Index n = 0; n < g.batch(); ++n) {
    for (Eigen::Index c = 0; c < first; ++c) a.plane(n, c) = g.plane(n, c);
    for (Eigen::Index c = first; c < g.channels(); ++c) b.plane(n, c - first) = g.plane(n, c);
  }
  return {std::move(a), std::move(b)};
}

}  // namespace gazeforge::blocks

#endif  // GAZEFORGE_BLOCKS_LAYERS_HPP
