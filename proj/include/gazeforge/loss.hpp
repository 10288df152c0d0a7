// Multitask loss stack: saliency BCE, batch-Wasserstein, their fusion, segmentation cross-entropy,
// the weighted total and the poly / two-phase weight schedule.
#ifndef GAZEFORGE_LOSS_HPP
#define GAZEFORGE_LOSS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gazeforge/error.hpp"
#include "gazeforge/raster.hpp"

namespace gazeforge {

template <typename Scalar, typename Gradient = std::vector<RealMap<Scalar>>>
struct LossReport {
  Scalar value = 0;
  Gradient gradient{};
};

inline constexpr double kBceClamp = 1e-7;
inline constexpr double kDefaultFusionAlpha = 0.3;

namespace detail {
template <typename Scalar>
void require_same_batch(const std::vector<RealMap<Scalar>>& pred, const std::vector<RealMap<Scalar>>& gt) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::shape, "batch sizes differ: " + std::to_string(pred.size()) + " vs " +
                                      std::to_string(gt.size()));
  }
  if (pred.empty()) throw Error(ErrorCode::empty, "empty batch");
  for (std::size_t b = 0; b < pred.size(); ++b) {
    if (pred[b].rows() != gt[b].rows() || pred[b].cols() != gt[b].cols()) {
      throw Error(ErrorCode::shape, "prediction and ground truth differ in size at batch index " +
                                        std::to_string(b));
    }
  }
}

// Sum of each 2x2 block (odd trailing row/column dropped).
template <typename Scalar>
RealMap<Scalar> block_sum_half(const RealMap<Scalar>& m) {
  return Scalar(4) * downsample_half(m);
}
}  // namespace detail

/// Mean binary cross entropy over every pixel of the batch; predictions clamped to [d, 1-d].
template <typename Scalar>
LossReport<Scalar> bce_loss(const std::vector<RealMap<Scalar>>& pred, const std::vector<RealMap<Scalar>>& gt) {
  detail::require_same_batch(pred, gt);
  Eigen::Index n = 0;
  for (const auto& p : pred) n += p.size();
  const Scalar delta(kBceClamp);

  LossReport<Scalar> report;
  Scalar total = 0;
  for (std::size_t b = 0; b < pred.size(); ++b) {
    const RealMap<Scalar> p = pred[b].cwiseMax(delta).cwiseMin(Scalar(1) - delta);
    const auto& g = gt[b];
    total -= (g * p.log() + (Scalar(1) - g) * (Scalar(1) - p).log()).sum();
    report.gradient.push_back((p - g) / (p * (Scalar(1) - p) * Scalar(n)));
  }
  report.value = total / Scalar(n);
  return report;
}

template <typename Scalar>
LossReport<Scalar, RealMap<Scalar>> bce_loss(const RealMap<Scalar>& pred, const RealMap<Scalar>& gt) {
  auto r = bce_loss(std::vector<RealMap<Scalar>>{pred}, std::vector<RealMap<Scalar>>{gt});
  return {r.value, std::move(r.gradient.front())};
}

/// Wasserstein-1 between two distributions on the unit-spaced index line with cost |i-j|/n:
/// W = (1/n) sum_k |C_k|, C_k the cumulative difference. Gradient is with respect to p.
template <typename Scalar>
struct Wasserstein1D {
  Scalar value = 0;
  Vector<Scalar> grad_p;
  Scalar min_abs_cdf_gap = std::numeric_limits<Scalar>::infinity();  // over k < n, for kink detection
};

template <typename DerivedP, typename DerivedQ>
Wasserstein1D<typename DerivedP::Scalar> wasserstein_1d(const Eigen::MatrixBase<DerivedP>& p,
                                                        const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  const Eigen::Index n = p.size();
  if (q.size() != n) throw Error(ErrorCode::shape, "distributions differ in length");
  Wasserstein1D<Scalar> out;
  out.grad_p = Vector<Scalar>::Zero(n);
  if (n == 0) return out;

  Vector<Scalar> cdf_gap(n);
  Scalar running = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    running += p(k) - q(k);
    cdf_gap(k) = running;
  }
  // The last gap is identically zero for normalized inputs; it only carries rounding noise.
  cdf_gap(n - 1) = 0;
  out.value = cdf_gap.cwiseAbs().sum() / Scalar(n);
  if (n > 1) out.min_abs_cdf_gap = cdf_gap.head(n - 1).cwiseAbs().minCoeff();

  // dW/dp_i = (1/n) sum_{k >= i} sign(C_k), with sign(0) = 0.
  Scalar suffix = 0;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    const Scalar c = cdf_gap(i);
    suffix += (c > 0) ? Scalar(1) : (c < 0 ? Scalar(-1) : Scalar(0));
    out.grad_p(i) = suffix / Scalar(n);
  }
  return out;
}

template <typename Scalar>
struct BatchWassersteinReport : LossReport<Scalar> {
  // Smallest |C_k| over the flattened batch; finite differences are unreliable once this is near 0.
  Scalar min_abs_cdf_gap = std::numeric_limits<Scalar>::infinity();
};

/// Batch-Wasserstein loss. Every map is downsampled 2x2, the whole batch is flattened into one
/// vector, both sides are normalized to distributions and compared with the 1-D closed form.
/// The gradient is with respect to the downsampled prediction maps (see upsample_gradient).
template <typename Scalar>
BatchWassersteinReport<Scalar> batch_wasserstein(const std::vector<RealMap<Scalar>>& pred,
                                                 const std::vector<RealMap<Scalar>>& gt) {
  detail::require_same_batch(pred, gt);
  std::vector<RealMap<Scalar>> pred_half;
  std::vector<RealMap<Scalar>> gt_half;
  Eigen::Index n = 0;
  for (std::size_t b = 0; b < pred.size(); ++b) {
    if ((pred[b] < Scalar(0)).any() || (gt[b] < Scalar(0)).any()) {
      throw Error(ErrorCode::domain, "saliency maps must be non-negative (batch index " + std::to_string(b) + ")");
    }
    pred_half.push_back(downsample_half(pred[b]));
    gt_half.push_back(downsample_half(gt[b]));
    n += pred_half.back().size();
  }

  Vector<Scalar> pv(n), qv(n);
  Eigen::Index offset = 0;
  for (std::size_t b = 0; b < pred.size(); ++b) {
    const Eigen::Index m = pred_half[b].size();
    pv.segment(offset, m) = flatten(pred_half[b]);
    qv.segment(offset, m) = flatten(gt_half[b]);
    offset += m;
  }
  const Scalar mass = pv.sum();
  const Vector<Scalar> p = normalize_to_distribution(pv);
  const Vector<Scalar> q = normalize_to_distribution(qv);
  const auto w = wasserstein_1d(p, q);

  // Through p = x / sum(x): dW/dx_j = (g_j - <g, p>) / sum(x). A zero-mass prediction maps to the
  // constant uniform distribution, where the gradient is taken as zero.
  Vector<Scalar> grad_x = Vector<Scalar>::Zero(n);
  if (mass >= Scalar(kNormalizationEpsilon)) {
    grad_x = (w.grad_p.array() - w.grad_p.dot(p)).matrix() / mass;
  }

  BatchWassersteinReport<Scalar> report;
  report.value = w.value;
  report.min_abs_cdf_gap = w.min_abs_cdf_gap;
  offset = 0;
  for (const auto& half : pred_half) {
    RealMap<Scalar> g(half.rows(), half.cols());
    Eigen::Map<Vector<Scalar>>(g.data(), g.size()) = grad_x.segment(offset, half.size());
    offset += half.size();
    report.gradient.push_back(std::move(g));
  }
  return report;
}

/// Spreads a half-resolution gradient back onto the full-resolution pixels that were averaged:
/// each of the four pixels of a block receives a quarter, dropped odd rows/columns receive zero.
template <typename Scalar>
RealMap<Scalar> upsample_gradient(const RealMap<Scalar>& half, Eigen::Index full_rows, Eigen::Index full_cols) {
  if (half.rows() != full_rows / 2 || half.cols() != full_cols / 2) {
    throw Error(ErrorCode::shape, "half-resolution gradient does not match the full-resolution size");
  }
  using Eigen::seqN;
  RealMap<Scalar> full = RealMap<Scalar>::Zero(full_rows, full_cols);
  const Eigen::Index h = half.rows(), w = half.cols();
  const RealMap<Scalar> quarter = half * Scalar(0.25);
  full(seqN(0, h, 2), seqN(0, w, 2)) = quarter;
  full(seqN(0, h, 2), seqN(1, w, 2)) = quarter;
  full(seqN(1, h, 2), seqN(0, w, 2)) = quarter;
  full(seqN(1, h, 2), seqN(1, w, 2)) = quarter;
  return full;
}

template <typename Scalar>
struct FusedSaliencyReport : LossReport<Scalar> {
  Scalar bw = 0;
  Scalar bce = 0;
};

/// alpha * L_bW + (1 - alpha) * L_bce.
///
/// The gradient lives on the half-resolution grid of the bW term. The BCE gradient is summed over
/// each 2x2 block, which makes the result the exact gradient with respect to a half-resolution map
/// that is nearest-upsampled to produce the prediction (for even map sizes).
template <typename Scalar>
FusedSaliencyReport<Scalar> fused_saliency_loss(const std::vector<RealMap<Scalar>>& pred,
                                                const std::vector<RealMap<Scalar>>& gt,
                                                Scalar alpha = Scalar(kDefaultFusionAlpha)) {
  if (!(alpha >= Scalar(0) && alpha <= Scalar(1))) {
    throw Error(ErrorCode::parameter, "alpha must lie in [0, 1]");
  }
  const auto bw = batch_wasserstein(pred, gt);
  const auto bce = bce_loss(pred, gt);
  FusedSaliencyReport<Scalar> report;
  report.bw = bw.value;
  report.bce = bce.value;
  report.value = alpha * bw.value + (Scalar(1) - alpha) * bce.value;
  for (std::size_t b = 0; b < pred.size(); ++b) {
    report.gradient.push_back(alpha * bw.gradient[b] + (Scalar(1) - alpha) * detail::block_sum_half(bce.gradient[b]));
  }
  return report;
}

/// Per-pixel class scores: one row per class, one column per pixel (row-major pixel order).
template <typename Scalar = double>
using ScoreStack = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Mean over pixels of -log softmax(logits)[label].
template <typename Scalar>
LossReport<Scalar, ScoreStack<Scalar>> cross_entropy_seg(const ScoreStack<Scalar>& logits, const LabelMask& labels) {
  const Eigen::Index classes = logits.rows();
  const Eigen::Index n = logits.cols();
  if (classes < 2) throw Error(ErrorCode::parameter, "segmentation needs at least two classes");
  if (n != labels.labels().size()) {
    throw Error(ErrorCode::shape, "score stack has " + std::to_string(n) + " pixels, mask has " +
                                      std::to_string(labels.labels().size()));
  }
  LossReport<Scalar, ScoreStack<Scalar>> report;
  report.gradient.resize(classes, n);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::int32_t label = labels.labels().data()[i];
    if (label >= classes) {
      throw Error(ErrorCode::domain, "label " + std::to_string(label) + " out of range for " +
                                         std::to_string(classes) + " classes");
    }
    const auto col = logits.col(i);
    const Scalar peak = col.maxCoeff();
    const auto shifted = (col.array() - peak).exp();
    const Scalar z = shifted.sum();
    total += std::log(z) + peak - col(label);
    report.gradient.col(i) = (shifted / z).matrix();
    report.gradient(label, i) -= Scalar(1);
  }
  report.gradient /= Scalar(n);
  report.value = total / Scalar(n);
  return report;
}

template <typename Scalar>
constexpr Scalar total_loss(Scalar l_seg, Scalar l_sal, Scalar lambda_seg, Scalar lambda_sal) {
  return lambda_seg * l_seg + lambda_sal * l_sal;
}

inline constexpr double kDefaultPolyPower = 0.9;

/// (1 - iter / max_iter)^power; iterations past the end clamp to 0 with a warning.
inline double poly_weight(long iter, long max_iter, double power = kDefaultPolyPower) {
  if (max_iter <= 0) throw Error(ErrorCode::parameter, "max_iter must be positive");
  if (!(power > 0)) throw Error(ErrorCode::parameter, "power must be positive");
  if (iter < 0) throw Error(ErrorCode::parameter, "iteration must be non-negative");
  if (iter > max_iter) {
    warn("poly_weight: iteration " + std::to_string(iter) + " past max_iter " + std::to_string(max_iter) +
         ", clamped to 0");
    return 0.0;
  }
  return std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(max_iter), power);
}

enum class Task { segmentation, saliency };
enum class Phase { one, two };

inline const char* to_string(Task t) { return t == Task::segmentation ? "segmentation" : "saliency"; }

struct ScheduleState {
  Phase phase = Phase::one;
  std::optional<Task> converged_task;
  long convergence_iter = 0;
  long max_iter = 1;
  double power = kDefaultPolyPower;
  long last_iter = -1;
};

struct TaskWeights {
  double segmentation = 1;
  double saliency = 1;
};

/// Phase I keeps both weights at 1. The first convergence signal switches to phase II, where the
/// converged task's weight decays as poly_weight(iter - k, max_iter - k) from the convergence
/// iteration k while the other task stays at 1.
inline TaskWeights two_phase_schedule(ScheduleState& state, long iter, std::optional<Task> converged = {}) {
  if (iter < state.last_iter) {
    throw Error(ErrorCode::parameter, "schedule iterations must be non-decreasing (got " + std::to_string(iter) +
                                          " after " + std::to_string(state.last_iter) + ")");
  }
  state.last_iter = iter;
  if (converged) {
    if (state.phase == Phase::one) {
      state.phase = Phase::two;
      state.converged_task = converged;
      state.convergence_iter = iter;
    } else {
      warn(std::string("schedule: ignoring convergence signal for ") + to_string(*converged) + " at iteration " +
           std::to_string(iter) + "; already in phase II");
    }
  }
  if (state.phase == Phase::one) return {};

  const long elapsed = iter - state.convergence_iter;
  const long span = state.max_iter - state.convergence_iter;
  double decayed = 0.0;
  if (elapsed == 0) {
    decayed = 1.0;
  } else if (span > 0) {
    decayed = poly_weight(elapsed, span, state.power);
  }
  TaskWeights w;
  (*state.converged_task == Task::segmentation ? w.segmentation : w.saliency) = decayed;
  return w;
}

class TwoPhaseSchedule {
 public:
  explicit TwoPhaseSchedule(long max_iter, double power = kDefaultPolyPower) {
    if (max_iter <= 0) throw Error(ErrorCode::parameter, "max_iter must be positive");
    if (!(power > 0)) throw Error(ErrorCode::parameter, "power must be positive");
    state_.max_iter = max_iter;
    state_.power = power;
  }

  TaskWeights step(long iter, std::optional<Task> converged = {}) {
    return two_phase_schedule(state_, iter, converged);
  }

  const ScheduleState& state() const { return state_; }

 private:
  ScheduleState state_;
};

}  // namespace gazeforge

#endif  // GAZEFORGE_LOSS_HPP
