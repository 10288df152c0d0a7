#ifndef GAZEFORGE_BLOCKS_TENSOR_HPP
#define GAZEFORGE_BLOCKS_TENSOR_HPP

#include <Eigen/Dense>

#include <array>
#include <random>
#include <string>

#include "gazeforge/error.hpp"

namespace gazeforge::blocks {

/// Dense NCHW tensor over a flat Eigen vector.
template <typename Scalar = double>
class Tensor4 {
 public:
  using Values = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Dims = std::array<Eigen::Index, 4>;

  Tensor4() = default;
  Tensor4(Eigen::Index n, Eigen::Index c, Eigen::Index h, Eigen::Index w)
      : dims_{n, c, h, w}, values_(Values::Zero(n * c * h * w)) {
    if (n < 0 || c < 0 || h < 0 || w < 0) throw Error(ErrorCode::shape, "negative tensor dimension");
  }
  explicit Tensor4(const Dims& d) : Tensor4(d[0], d[1], d[2], d[3]) {}

  static Tensor4 constant(const Dims& d, Scalar v) {
    Tensor4 t(d);
    t.values_.setConstant(v);
    return t;
  }

  template <typename Rng>
  static Tensor4 uniform(const Dims& d, Rng& rng, Scalar lo = Scalar(-1), Scalar hi = Scalar(1)) {
    std::uniform_real_distribution<double> u(static_cast<double>(lo), static_cast<double>(hi));
    Tensor4 t(d);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.values_(i) = Scalar(u(rng));
    return t;
  }

  Eigen::Index batch() const { return dims_[0]; }
  Eigen::Index channels() const { return dims_[1]; }
  Eigen::Index height() const { return dims_[2]; }
  Eigen::Index width() const { return dims_[3]; }
  const Dims& dims() const { return dims_; }
  Eigen::Index size() const { return values_.size(); }

  Eigen::Index index(Eigen::Index n, Eigen::Index c, Eigen::Index h, Eigen::Index w) const {
    return ((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w;
  }
  Scalar& operator()(Eigen::Index n, Eigen::Index c, Eigen::Index h, Eigen::Index w) {
    return values_(index(n, c, h, w));
  }
  Scalar operator()(Eigen::Index n, Eigen::Index c, Eigen::Index h, Eigen::Index w) const {
    return values_(index(n, c, h, w));
  }

  Values& values() { return values_; }
  const Values& values() const { return values_; }

  /// Contiguous H*W plane of one (batch, channel) pair.
  auto plane(Eigen::Index n, Eigen::Index c) { return values_.segment(index(n, c, 0, 0), dims_[2] * dims_[3]); }
  auto plane(Eigen::Index n, Eigen::Index c) const {
    return values_.segment(index(n, c, 0, 0), dims_[2] * dims_[3]);
  }

  bool same_dims(const Tensor4& o) const { return dims_ == o.dims_; }

 private:
  Dims dims_{0, 0, 0, 0};
  Values values_;
};

inline std::string dims_string(const std::array<Eigen::Index, 4>& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]) + "x" + std::to_string(d[3]);
}

template <typename Scalar>
Scalar inner_product(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b) {
  if (!a.same_dims(b)) throw Error(ErrorCode::shape, "inner product of tensors with different dims");
  return a.values().dot(b.values());
}

}  // namespace gazeforge::blocks

#endif  // GAZEFORGE_BLOCKS_TENSOR_HPP
