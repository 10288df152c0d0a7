// Raster primitives: label masks, real-valued maps, connected components, pooling, normalization.
#ifndef GAZEFORGE_RASTER_HPP
#define GAZEFORGE_RASTER_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "gazeforge/error.hpp"

namespace gazeforge {

/// Row-major real raster; rows() is the height, cols() the width.
template <typename Scalar = double>
using RealMap = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar = double>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using LabelGrid = Eigen::Array<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Pixel {
  int row = 0;
  int col = 0;
  friend constexpr auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Integer class raster. Label 0 is background; every label is below class_count().
class LabelMask {
 public:
  LabelMask() = default;

  /// class_count <= 0 means "infer as max label + 1".
  explicit LabelMask(LabelGrid labels, int class_count = 0) : labels_(std::move(labels)) {
    const int max_label = labels_.size() > 0 ? labels_.maxCoeff() : 0;
    if (labels_.size() > 0 && labels_.minCoeff() < 0) {
      throw Error(ErrorCode::domain, "label mask contains a negative label");
    }
    class_count_ = class_count > 0 ? class_count : max_label + 1;
    if (max_label >= class_count_) {
      throw Error(ErrorCode::domain, "label " + std::to_string(max_label) +
                                         " is not below the declared class count " +
                                         std::to_string(class_count_));
    }
  }

  static LabelMask zeros(int width, int height, int class_count = 0) {
    return LabelMask(LabelGrid::Zero(height, width), class_count);
  }

  int width() const { return static_cast<int>(labels_.cols()); }
  int height() const { return static_cast<int>(labels_.rows()); }
  int class_count() const { return class_count_; }
  const LabelGrid& labels() const { return labels_; }
  std::int32_t operator()(int row, int col) const { return labels_(row, col); }
  std::int32_t at(Pixel p) const { return labels_(p.row, p.col); }
  bool contains(Pixel p) const { return p.row >= 0 && p.col >= 0 && p.row < height() && p.col < width(); }
  bool same_shape(const LabelMask& other) const {
    return width() == other.width() && height() == other.height();
  }

 private:
  LabelGrid labels_;
  int class_count_ = 1;
};

/// Maximal connected same-label region. Pixels are kept in row-major order.
struct Component {
  std::int32_t label = 0;
  std::vector<Pixel> pixels;

  std::size_t area() const { return pixels.size(); }
  Eigen::Vector2d centroid() const {
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (const Pixel& p : pixels) sum += Eigen::Vector2d(p.row, p.col);
    return sum / static_cast<double>(pixels.size());
  }
  Pixel top_left() const { return pixels.front(); }
};

enum class Connectivity { four, eight };

/// Labels every non-background region; output sorted by (label, first pixel in row-major order).
inline std::vector<Component> connected_components(const LabelMask& mask,
                                                    Connectivity connectivity = Connectivity::four) {
  const int h = mask.height();
  const int w = mask.width();
  std::vector<char> seen(static_cast<std::size_t>(h) * w, 0);
  std::vector<Component> out;

  static constexpr std::array<Pixel, 8> offsets{
      {{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}}};
  const std::size_t n_offsets = connectivity == Connectivity::four ? 4 : 8;

  std::vector<Pixel> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto idx = static_cast<std::size_t>(r) * w + c;
      const std::int32_t label = mask(r, c);
      if (label == 0 || seen[idx]) continue;
      Component comp;
      comp.label = label;
      seen[idx] = 1;
      stack.assign(1, Pixel{r, c});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        comp.pixels.push_back(p);
        for (std::size_t k = 0; k < n_offsets; ++k) {
          const Pixel q{p.row + offsets[k].row, p.col + offsets[k].col};
          if (!mask.contains(q)) continue;
          const auto qi = static_cast<std::size_t>(q.row) * w + q.col;
          if (seen[qi] || mask.at(q) != label) continue;
          seen[qi] = 1;
          stack.push_back(q);
        }
      }
      std::sort(comp.pixels.begin(), comp.pixels.end());
      out.push_back(std::move(comp));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Component& a, const Component& b) {
    if (a.label != b.label) return a.label < b.label;
    return a.top_left() < b.top_left();
  });
  return out;
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& values, const std::string& what) {
  if (!values.derived().allFinite()) {
    throw Error(ErrorCode::domain, what + " contains non-finite values");
  }
}

/// 2x2 mean pooling; a trailing odd row or column is dropped.
template <typename Derived>
RealMap<typename Derived::Scalar> downsample_half(const Eigen::ArrayBase<Derived>& map) {
  using Eigen::seqN;
  const Eigen::Index h2 = map.rows() / 2;
  const Eigen::Index w2 = map.cols() / 2;
  if (map.rows() < 2 || map.cols() < 2) {
    throw Error(ErrorCode::shape, "map too small to downsample: " + std::to_string(map.cols()) + "x" +
                                      std::to_string(map.rows()));
  }
  const auto& m = map.derived();
  using Scalar = typename Derived::Scalar;
  return Scalar(0.25) * (m(seqN(0, h2, 2), seqN(0, w2, 2)) + m(seqN(0, h2, 2), seqN(1, w2, 2)) +
                         m(seqN(1, h2, 2), seqN(0, w2, 2)) + m(seqN(1, h2, 2), seqN(1, w2, 2)));
}

inline constexpr double kNormalizationEpsilon = 1e-12;

/// Scales non-negative mass to sum one; a (near) zero-mass input becomes uniform.
template <typename Derived>
Vector<typename Derived::Scalar> normalize_to_distribution(const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  const auto& v = values.derived();
  const Eigen::Index n = v.size();
  if (n == 0) throw Error(ErrorCode::empty, "cannot normalize an empty vector");
  require_finite(v, "distribution input");
  if ((v.array() < Scalar(0)).any()) {
    throw Error(ErrorCode::domain, "distribution input contains negative values");
  }
  const Scalar total = v.sum();
  Vector<Scalar> out(n);
  if (total < Scalar(kNormalizationEpsilon)) {
    out.setConstant(Scalar(1) / Scalar(n));
  } else {
    for (Eigen::Index i = 0; i < n; ++i) out(i) = v(i) / total;
  }
  return out;
}

/// Flattened row-major view of a map as a column vector.
template <typename Scalar>
Eigen::Map<const Vector<Scalar>> flatten(const RealMap<Scalar>& map) {
  return {map.data(), map.size()};
}

}  // namespace gazeforge

#endif  // GAZEFORGE_RASTER_HPP
