// Saliency, segmentation and scanpath evaluation metrics.
#ifndef GAZEFORGE_METRICS_HPP
#define GAZEFORGE_METRICS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gazeforge/error.hpp"
#include "gazeforge/raster.hpp"
#include "gazeforge/saliency_gen.hpp"

namespace gazeforge {

namespace detail {
template <typename Scalar>
void require_same_size(const RealMap<Scalar>& a, const RealMap<Scalar>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::shape, std::string(what) + ": maps differ in size");
  }
}

// Distinct in-bounds fixation pixels as flat row-major indices, ascending.
inline std::vector<Eigen::Index> fixation_indices(const FixationSet& fixations, Eigen::Index rows, Eigen::Index cols) {
  std::vector<Eigen::Index> idx;
  idx.reserve(fixations.size());
  for (const auto& f : fixations) {
    if (f.point.row < 0 || f.point.col < 0 || f.point.row >= rows || f.point.col >= cols) {
      throw Error(ErrorCode::domain, "fixation outside the saliency map");
    }
    idx.push_back(static_cast<Eigen::Index>(f.point.row) * cols + f.point.col);
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}
}  // namespace detail

/// Normalized scanpath saliency: mean z-score (population std) of the map at the fixated pixels.
/// Repeated fixations on one pixel count once. A constant map scores 0.
template <typename Scalar>
double nss(const RealMap<Scalar>& sal, const FixationSet& fixations) {
  if (fixations.empty()) throw Error(ErrorCode::empty, "NSS needs at least one fixation");
  const auto idx = detail::fixation_indices(fixations, sal.rows(), sal.cols());
  const Eigen::ArrayXd v = flatten(sal).template cast<double>().array();
  const double mean = v.mean();
  const double stddev = std::sqrt((v - mean).square().mean());
  if (!(stddev > 1e-15 * (1.0 + std::abs(mean)))) return 0.0;
  double total = 0;
  for (Eigen::Index i : idx) total += (v(i) - mean) / stddev;
  return total / static_cast<double>(idx.size());
}

/// Exact ROC area between positive and negative score samples (thresholds at every distinct value,
/// ties contribute diagonal segments).
inline double roc_auc(std::vector<double> positives, std::vector<double> negatives) {
  if (positives.empty() || negatives.empty()) throw Error(ErrorCode::empty, "ROC needs both classes");
  std::sort(positives.begin(), positives.end(), std::greater<>());
  std::sort(negatives.begin(), negatives.end(), std::greater<>());
  const double np = static_cast<double>(positives.size());
  const double nn = static_cast<double>(negatives.size());
  std::size_t ip = 0, in = 0;
  double tpr_prev = 0, fpr_prev = 0, area = 0;
  while (ip < positives.size() || in < negatives.size()) {
    double t = -std::numeric_limits<double>::infinity();
    if (ip < positives.size()) t = positives[ip];
    if (in < negatives.size()) t = std::max(t, negatives[in]);
    while (ip < positives.size() && positives[ip] >= t) ++ip;
    while (in < negatives.size() && negatives[in] >= t) ++in;
    const double tpr = ip / np;
    const double fpr = in / nn;
    area += (fpr - fpr_prev) * (tpr + tpr_prev) * 0.5;
    tpr_prev = tpr;
    fpr_prev = fpr;
  }
  return area;
}

struct AucBorjiParams {
  int n_splits = 100;
  int n_negatives = 0;  // 0: as many negatives as fixated pixels
  std::uint64_t seed = 0;
};

/// AUC-Borji: fixated pixels are positives; each split draws negatives uniformly (with
/// replacement) from the non-fixated pixels. Returns the mean ROC area over splits.
template <typename Scalar>
double auc_borji(const RealMap<Scalar>& sal, const FixationSet& fixations, const AucBorjiParams& params = {}) {
  if (fixations.empty()) throw Error(ErrorCode::empty, "AUC needs at least one fixation");
  if (params.n_splits < 1) throw Error(ErrorCode::parameter, "n_splits must be >= 1");
  if (params.n_negatives < 0) throw Error(ErrorCode::parameter, "n_negatives must be >= 0");
  const auto idx = detail::fixation_indices(fixations, sal.rows(), sal.cols());
  const Eigen::Index total = sal.size();
  if (static_cast<Eigen::Index>(idx.size()) >= total) {
    throw Error(ErrorCode::domain, "fixations cover every pixel; no negatives available");
  }
  const auto v = flatten(sal);
  std::vector<double> positives;
  for (Eigen::Index i : idx) positives.push_back(static_cast<double>(v(i)));

  std::vector<Eigen::Index> pool;
  pool.reserve(total - idx.size());
  for (Eigen::Index i = 0, k = 0; i < total; ++i) {
    if (k < static_cast<Eigen::Index>(idx.size()) && idx[k] == i) {
      ++k;
      continue;
    }
    pool.push_back(i);
  }

  const int n_neg = params.n_negatives > 0 ? params.n_negatives : static_cast<int>(idx.size());
  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<double> negatives(n_neg);
  double sum = 0;
  for (int s = 0; s < params.n_splits; ++s) {
    for (auto& x : negatives) x = static_cast<double>(v(pool[pick(rng)]));
    sum += roc_auc(positives, negatives);
  }
  return sum / params.n_splits;
}

/// Histogram intersection of the two sum-normalized maps.
template <typename Scalar>
double similarity(const RealMap<Scalar>& a, const RealMap<Scalar>& b) {
  detail::require_same_size(a, b, "similarity");
  const auto pa = normalize_to_distribution(flatten(a));
  const auto pb = normalize_to_distribution(flatten(b));
  return static_cast<double>(pa.cwiseMin(pb).sum());
}

enum class DiceMode { binary, per_type };

struct DiceResult {
  double mean = 1;                 // over classes present in either mask; 1 if none are
  std::map<int, double> per_class;
};

inline DiceResult dice(const LabelMask& pred, const LabelMask& gt, DiceMode mode = DiceMode::per_type) {
  if (!pred.same_shape(gt)) throw Error(ErrorCode::shape, "dice: masks differ in size");
  LabelGrid p = pred.labels();
  LabelGrid g = gt.labels();
  if (mode == DiceMode::binary) {
    p = (p > 0).cast<std::int32_t>();
    g = (g > 0).cast<std::int32_t>();
  }
  std::map<int, std::array<double, 3>> counts;  // |P|, |G|, |P and G|
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const int a = p.data()[i];
    const int b = g.data()[i];
    if (a > 0) counts[a][0] += 1;
    if (b > 0) counts[b][1] += 1;
    if (a > 0 && a == b) counts[a][2] += 1;
  }
  DiceResult out;
  if (counts.empty()) return out;
  double sum = 0;
  for (const auto& [label, c] : counts) {
    const double d = 2.0 * c[2] / (c[0] + c[1]);
    out.per_class[label] = d;
    sum += d;
  }
  out.mean = sum / static_cast<double>(counts.size());
  return out;
}

/// Foreground pixels with at least one background 4-neighbour; outside the image counts as background.
inline std::vector<Pixel> boundary_pixels(const LabelGrid& foreground) {
  std::vector<Pixel> out;
  const int h = static_cast<int>(foreground.rows());
  const int w = static_cast<int>(foreground.cols());
  auto bg = [&](int r, int c) { return r < 0 || c < 0 || r >= h || c >= w || foreground(r, c) == 0; };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (foreground(r, c) == 0) continue;
      if (bg(r - 1, c) || bg(r + 1, c) || bg(r, c - 1) || bg(r, c + 1)) out.push_back({r, c});
    }
  }
  return out;
}

namespace detail {
// 1-D squared distance transform of a sampled function (lower envelope of parabolas).
inline void distance_transform_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  v.assign(n, 0);
  z.assign(n + 1, 0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    // z[0] = -inf, so k never drops below zero.
    double s = 0;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(d, d + n, inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

// Exact squared Euclidean distance to the nearest seed pixel, separable in rows then columns.
inline Eigen::ArrayXXd squared_distance_to(const std::vector<Pixel>& seeds, int rows, int cols) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Eigen::ArrayXXd grid = Eigen::ArrayXXd::Constant(rows, cols, inf);
  for (const Pixel& p : seeds) grid(p.row, p.col) = 0;
  std::vector<int> v;
  std::vector<double> z;
  std::vector<double> f(std::max(rows, cols)), d(std::max(rows, cols));
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) f[r] = grid(r, c);
    distance_transform_1d(f.data(), d.data(), rows, v, z);
    for (int r = 0; r < rows; ++r) grid(r, c) = d[r];
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) f[c] = grid(r, c);
    distance_transform_1d(f.data(), d.data(), cols, v, z);
    for (int c = 0; c < cols; ++c) grid(r, c) = d[c];
  }
  return grid;
}

inline double directed_hausdorff(const std::vector<Pixel>& from, const Eigen::ArrayXXd& sq_dist_to_other) {
  double worst = 0;
  for (const Pixel& p : from) worst = std::max(worst, sq_dist_to_other(p.row, p.col));
  return std::sqrt(worst);
}
}  // namespace detail

/// Symmetric Hausdorff distance (pixels) between the foreground boundaries of two masks.
inline double hausdorff(const LabelGrid& pred_foreground, const LabelGrid& gt_foreground) {
  if (pred_foreground.rows() != gt_foreground.rows() || pred_foreground.cols() != gt_foreground.cols()) {
    throw Error(ErrorCode::shape, "hausdorff: masks differ in size");
  }
  const auto a = boundary_pixels(pred_foreground);
  const auto b = boundary_pixels(gt_foreground);
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::empty, std::string("hausdorff: ") + (a.empty() ? "prediction" : "ground truth") +
                                      " has no foreground");
  }
  const int rows = static_cast<int>(gt_foreground.rows());
  const int cols = static_cast<int>(gt_foreground.cols());
  const auto to_b = detail::squared_distance_to(b, rows, cols);
  const auto to_a = detail::squared_distance_to(a, rows, cols);
  return std::max(detail::directed_hausdorff(a, to_b), detail::directed_hausdorff(b, to_a));
}

inline double hausdorff(const LabelMask& pred, const LabelMask& gt) {
  return hausdorff(LabelGrid((pred.labels() > 0).cast<std::int32_t>()),
                   LabelGrid((gt.labels() > 0).cast<std::int32_t>()));
}

/// Mean per-class Hausdorff over classes present in both masks; nullopt if there are none.
inline std::optional<double> hausdorff_per_type(const LabelMask& pred, const LabelMask& gt) {
  if (!pred.same_shape(gt)) throw Error(ErrorCode::shape, "hausdorff: masks differ in size");
  std::set<int> in_pred, in_gt;
  for (Eigen::Index i = 0; i < pred.labels().size(); ++i) {
    if (pred.labels().data()[i] > 0) in_pred.insert(pred.labels().data()[i]);
    if (gt.labels().data()[i] > 0) in_gt.insert(gt.labels().data()[i]);
  }
  double sum = 0;
  int count = 0;
  for (int c : in_pred) {
    if (!in_gt.count(c)) continue;
    sum += hausdorff(LabelGrid((pred.labels() == c).cast<std::int32_t>()),
                     LabelGrid((gt.labels() == c).cast<std::int32_t>()));
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

struct ScanpathAgreement {
  double top_one = 0;
  double whole = 0;
  std::optional<double> kendall_tau;  // over instruments ranked by both paths; needs at least two
};

/// Instrument-level comparison of two scanpaths: first instrument, full order, and Kendall's tau.
inline ScanpathAgreement scanpath_accuracy(const Scanpath& pred, const Scanpath& gt) {
  if (pred.empty() || gt.empty()) throw Error(ErrorCode::empty, "scanpath comparison needs non-empty paths");
  const auto a = pred.instrument_order();
  const auto b = gt.instrument_order();
  ScanpathAgreement out;
  out.top_one = a.front() == b.front() ? 1.0 : 0.0;
  out.whole = a == b ? 1.0 : 0.0;

  std::map<int, int> rank_a, rank_b;
  for (std::size_t i = 0; i < a.size(); ++i) rank_a[a[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < b.size(); ++i) rank_b[b[i]] = static_cast<int>(i);
  std::vector<int> common;
  for (int id : a) {
    if (rank_b.count(id)) common.push_back(id);
  }
  if (common.size() >= 2) {
    long concordant = 0, discordant = 0;
    for (std::size_t i = 0; i < common.size(); ++i) {
      for (std::size_t j = i + 1; j < common.size(); ++j) {
        const int da = rank_a[common[i]] - rank_a[common[j]];
        const int db = rank_b[common[i]] - rank_b[common[j]];
        (da * db > 0 ? concordant : discordant) += 1;
      }
    }
    const double pairs = common.size() * (common.size() - 1) / 2.0;
    out.kendall_tau = (concordant - discordant) / pairs;
  }
  return out;
}

/// Per-frame metric rows with mean/std aggregation. NaN entries are excluded from aggregates.
class MetricTable {
 public:
  explicit MetricTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(int frame_id, const std::map<std::string, double>& values) {
    std::vector<double> row(columns_.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const auto it = values.find(columns_[c]);
      if (it != values.end()) row[c] = it->second;
    }
    frames_.push_back(frame_id);
    rows_.push_back(std::move(row));
  }

  struct Summary {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();  // population
    int count = 0;
  };

  Summary summary(std::size_t column) const {
    Summary s;
    double sum = 0, sq = 0;
    for (const auto& row : rows_) {
      if (std::isnan(row[column])) continue;
      sum += row[column];
      sq += row[column] * row[column];
      ++s.count;
    }
    if (s.count == 0) return s;
    s.mean = sum / s.count;
    s.stddev = std::sqrt(std::max(0.0, sq / s.count - s.mean * s.mean));
    return s;
  }

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<int>& frames() const { return frames_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

 private:
  std::vector<std::string> columns_;
  std::vector<int> frames_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace gazeforge

#endif  // GAZEFORGE_METRICS_HPP
