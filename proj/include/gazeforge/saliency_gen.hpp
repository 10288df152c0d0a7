// Task-oriented saliency ground truth from instrument part masks.
//
// Fixations are simulated on the wrist and clasper of every instrument. Each instrument is weighted
// by how much its attended region deformed and moved since a single reference frame:
//
//   w_i = lambda_de * mu_i / min_j mu_j + lambda_di * ln(2 d_i / min_j d_j)
//
// with mu_i = max(s_t, s_t') / min(s_t, s_t') the area ratio and d_i the centroid displacement.
// Both d_i and min d are floored at epsilon so stationary instruments stay finite.
#ifndef GAZEFORGE_SALIENCY_GEN_HPP
#define GAZEFORGE_SALIENCY_GEN_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "gazeforge/error.hpp"
#include "gazeforge/raster.hpp"

namespace gazeforge {

enum class Part : int { background = 0, shaft = 1, wrist = 2, clasper = 3 };

inline constexpr int kPartSlots = 4;

// Combined instrument/part labels: label = instrument * kPartSlots + part, instrument >= 1.
constexpr std::int32_t encode_part(int instrument, Part part) {
  return part == Part::background ? 0 : instrument * kPartSlots + static_cast<int>(part);
}
constexpr int instrument_of(std::int32_t label) { return label / kPartSlots; }
constexpr Part part_of(std::int32_t label) { return static_cast<Part>(label % kPartSlots); }
constexpr bool is_attended(std::int32_t label) {
  return label > 0 && (part_of(label) == Part::wrist || part_of(label) == Part::clasper);
}

inline const char* to_string(Part part) {
  switch (part) {
    case Part::background: return "background";
    case Part::shaft: return "shaft";
    case Part::wrist: return "wrist";
    case Part::clasper: return "clasper";
  }
  return "background";
}

/// Merges a part mask {0,1,2,3} with an instrument-class mask into combined labels.
/// Part pixels that carry no instrument class are treated as background.
inline LabelMask compose_instrument_parts(const LabelMask& parts, const LabelMask& instruments) {
  if (!parts.same_shape(instruments)) {
    throw Error(ErrorCode::shape, "part and instrument masks differ in size");
  }
  if (parts.labels().size() > 0 && parts.labels().maxCoeff() >= kPartSlots) {
    throw Error(ErrorCode::domain, "part labels must lie in [0, 3]");
  }
  const LabelGrid combined =
      (parts.labels() > 0 && instruments.labels() > 0)
          .select(instruments.labels() * kPartSlots + parts.labels(), LabelGrid::Zero(parts.height(), parts.width()));
  return LabelMask(combined, std::max(instruments.class_count(), 1) * kPartSlots);
}

/// Instrument ids with at least one wrist or clasper pixel, ascending.
inline std::vector<int> attended_instruments(const LabelMask& parts) {
  std::vector<int> ids;
  for (Eigen::Index i = 0; i < parts.labels().size(); ++i) {
    const std::int32_t label = parts.labels().data()[i];
    if (is_attended(label)) ids.push_back(instrument_of(label));
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

struct PartDynamics {
  int instrument_id = 0;
  double area_t = 0;
  double area_prev = 0;
  double deformation = 1;   // >= 1
  double displacement = 0;  // pixels
  Eigen::Vector2d centroid_t = Eigen::Vector2d::Zero();
  Eigen::Vector2d centroid_prev = Eigen::Vector2d::Zero();
};

struct PartDynamicsResult {
  std::vector<PartDynamics> dynamics;
  // Requested instruments present in exactly one of the two frames.
  std::vector<int> omitted;
};

namespace detail {
struct RegionMoments {
  double count = 0;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
};

inline std::map<int, RegionMoments> attended_moments(const LabelMask& parts) {
  std::map<int, RegionMoments> out;
  for (int r = 0; r < parts.height(); ++r) {
    for (int c = 0; c < parts.width(); ++c) {
      const std::int32_t label = parts(r, c);
      if (!is_attended(label)) continue;
      auto& m = out[instrument_of(label)];
      m.count += 1;
      m.sum += Eigen::Vector2d(r, c);
    }
  }
  return out;
}
}  // namespace detail

/// Area and centroid change of each instrument's wrist+clasper region between t' and t.
inline PartDynamicsResult part_dynamics(const LabelMask& parts_t, const LabelMask& parts_prev,
                                        const std::vector<int>& instrument_ids) {
  if (!parts_t.same_shape(parts_prev)) {
    throw Error(ErrorCode::shape, "frame masks differ in size");
  }
  const auto now = detail::attended_moments(parts_t);
  const auto before = detail::attended_moments(parts_prev);

  std::vector<int> ids = instrument_ids;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  PartDynamicsResult result;
  for (int id : ids) {
    const auto a = now.find(id);
    const auto b = before.find(id);
    const bool in_t = a != now.end();
    const bool in_prev = b != before.end();
    if (!in_t && !in_prev) continue;
    if (!in_t || !in_prev) {
      result.omitted.push_back(id);
      continue;
    }
    PartDynamics d;
    d.instrument_id = id;
    d.area_t = a->second.count;
    d.area_prev = b->second.count;
    d.deformation = std::max(d.area_t, d.area_prev) / std::min(d.area_t, d.area_prev);
    d.centroid_t = a->second.sum / a->second.count;
    d.centroid_prev = b->second.sum / b->second.count;
    d.displacement = (d.centroid_t - d.centroid_prev).norm();
    result.dynamics.push_back(d);
  }
  return result;
}

struct WeightParams {
  double lambda_de = 0.5;
  double lambda_di = 0.5;
  double epsilon = 1e-6;
};

inline std::map<int, double> instrument_weights(const std::vector<PartDynamics>& dyn,
                                                const WeightParams& params = {}) {
  if (dyn.empty()) throw Error(ErrorCode::empty, "no trackable instruments");
  if (params.lambda_de < 0 || params.lambda_di < 0) {
    throw Error(ErrorCode::parameter, "deformation/displacement weights must be non-negative");
  }
  if (!(params.epsilon > 0)) throw Error(ErrorCode::parameter, "epsilon must be positive");

  double min_mu = std::numeric_limits<double>::infinity();
  double min_d = std::numeric_limits<double>::infinity();
  for (const auto& d : dyn) {
    min_mu = std::min(min_mu, d.deformation);
    min_d = std::min(min_d, d.displacement);
  }
  min_d = std::max(min_d, params.epsilon);

  std::map<int, double> w;
  for (const auto& d : dyn) {
    const double di = std::max(d.displacement, params.epsilon);
    w[d.instrument_id] =
        params.lambda_de * (d.deformation / min_mu) + params.lambda_di * std::log(2.0 * di / min_d);
  }
  return w;
}

struct Fixation {
  int instrument_id = 0;
  Part part = Part::wrist;
  Pixel point;
  double weight = 0;
};

using FixationSet = std::vector<Fixation>;

namespace detail {
inline Pixel nearest_pixel(const std::vector<Pixel>& pixels, const Eigen::Vector2d& target) {
  Pixel best = pixels.front();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (const Pixel& p : pixels) {  // row-major, so ties keep the first
    const double d2 = (Eigen::Vector2d(p.row, p.col) - target).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = p;
    }
  }
  return best;
}

// Snapped centroid, then up to `count - 1` grid nodes over the component's bounding box.
inline std::vector<Pixel> part_points(const Component& comp, int count) {
  std::vector<Pixel> points{nearest_pixel(comp.pixels, comp.centroid())};
  const int extra = count - 1;
  if (extra <= 0) return points;

  int r0 = comp.pixels.front().row, r1 = comp.pixels.back().row;
  int c0 = comp.pixels.front().col, c1 = c0;
  for (const Pixel& p : comp.pixels) {
    c0 = std::min(c0, p.col);
    c1 = std::max(c1, p.col);
  }
  const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(extra))));
  for (int i = 0; i < g && static_cast<int>(points.size()) < count; ++i) {
    for (int j = 0; j < g && static_cast<int>(points.size()) < count; ++j) {
      const Eigen::Vector2d node(r0 + (i + 0.5) * (r1 - r0 + 1) / g - 0.5,
                                 c0 + (j + 0.5) * (c1 - c0 + 1) / g - 0.5);
      const Pixel p = nearest_pixel(comp.pixels, node);
      if (std::find(points.begin(), points.end(), p) == points.end()) points.push_back(p);
    }
  }
  return points;
}
}  // namespace detail

/// One fixation per wrist component and per clasper component of each weighted instrument,
/// placed at the component centroid snapped to the nearest pixel of that component.
inline FixationSet place_fixations(const LabelMask& parts_t, const std::map<int, double>& weights,
                                   int points_per_part = 1) {
  if (points_per_part < 1) throw Error(ErrorCode::parameter, "points_per_part must be >= 1");
  const auto comps = connected_components(parts_t, Connectivity::four);

  FixationSet out;
  std::vector<std::string> missing;
  for (const auto& [id, w] : weights) {
    if (!std::isfinite(w) || w <= 0) {
      throw Error(ErrorCode::domain, "instrument " + std::to_string(id) + " has non-positive weight",
                  {std::to_string(id)});
    }
    const std::size_t before = out.size();
    for (Part part : {Part::wrist, Part::clasper}) {
      const std::int32_t label = encode_part(id, part);
      for (const Component& comp : comps) {
        if (comp.label != label) continue;
        for (const Pixel& p : detail::part_points(comp, points_per_part)) {
          out.push_back(Fixation{id, part, p, w});
        }
      }
    }
    if (out.size() == before) missing.push_back(std::to_string(id));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::domain, "weighted instruments without wrist/clasper pixels: " + list, missing);
  }
  return out;
}

inline double default_sigma(int width) { return width / 32.0; }

/// Sum of isotropic Gaussians (amplitude = fixation weight), rescaled so the maximum is one.
template <typename Scalar = double>
RealMap<Scalar> render_saliency(const FixationSet& fixations, int width, int height, double sigma) {
  if (!(sigma > 0) || !std::isfinite(sigma)) throw Error(ErrorCode::parameter, "sigma must be positive");
  if (width < 1 || height < 1) throw Error(ErrorCode::shape, "saliency map must be at least 1x1");
  RealMap<Scalar> map = RealMap<Scalar>::Zero(height, width);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  const Eigen::ArrayXd rows = Eigen::ArrayXd::LinSpaced(height, 0, height - 1);
  const Eigen::ArrayXd cols = Eigen::ArrayXd::LinSpaced(width, 0, width - 1);
  for (const Fixation& f : fixations) {
    if (f.point.row < 0 || f.point.col < 0 || f.point.row >= height || f.point.col >= width) {
      throw Error(ErrorCode::domain, "fixation outside the map");
    }
    // exp(-(dr^2 + dc^2)/2s^2) factors into a row profile times a column profile.
    const Eigen::VectorXd gr = (-(rows - f.point.row).square() * inv_two_var).exp().matrix();
    const Eigen::RowVectorXd gc = (-(cols - f.point.col).square() * inv_two_var).exp().matrix().transpose();
    map += (f.weight * (gr * gc)).array().template cast<Scalar>();
  }
  const Scalar peak = map.size() > 0 ? map.maxCoeff() : Scalar(0);
  if (peak > Scalar(0)) map /= peak;
  return map;
}

/// Weight-ordered fixation sequence.
class Scanpath {
 public:
  Scanpath() = default;

  /// Adopts an already ordered sequence; throws if it violates the weight ordering.
  static Scanpath from_ordered(std::vector<Fixation> entries) {
    for (std::size_t i = 1; i < entries.size(); ++i) {
      const auto& a = entries[i - 1];
      const auto& b = entries[i];
      if (b.weight > a.weight || (b.weight == a.weight && b.instrument_id < a.instrument_id)) {
        throw Error(ErrorCode::domain, "scanpath entries not ordered by descending weight");
      }
    }
    Scanpath s;
    s.entries_ = std::move(entries);
    return s;
  }

  const std::vector<Fixation>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Instrument ids in visiting order, each listed once.
  std::vector<int> instrument_order() const {
    std::vector<int> order;
    for (const auto& f : entries_) {
      if (std::find(order.begin(), order.end(), f.instrument_id) == order.end()) {
        order.push_back(f.instrument_id);
      }
    }
    return order;
  }

 private:
  std::vector<Fixation> entries_;
};

/// Descending weight; ties by instrument id, then wrist before clasper, then row-major point order.
inline Scanpath generate_scanpath(FixationSet fixations) {
  std::stable_sort(fixations.begin(), fixations.end(), [](const Fixation& a, const Fixation& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.instrument_id != b.instrument_id) return a.instrument_id < b.instrument_id;
    if (a.part != b.part) return static_cast<int>(a.part) < static_cast<int>(b.part);
    return a.point < b.point;
  });
  return Scanpath::from_ordered(std::move(fixations));
}

struct SaliencyParams {
  WeightParams weights;
  double sigma = 0;  // <= 0 selects default_sigma(width)
  int points_per_part = 1;
};

struct FrameSaliency {
  RealMap<double> map;
  Scanpath scanpath;
  std::map<int, double> weights;
  std::vector<PartDynamics> dynamics;
  std::vector<int> omitted;
};

/// Full per-frame pipeline: dynamics against the reference frame, weights, fixations, map, scanpath.
/// A frame with no instrument trackable in both frames yields an all-zero map and empty scanpath.
inline FrameSaliency generate_frame_saliency(const LabelMask& parts_t, const LabelMask& parts_prev,
                                             const SaliencyParams& params = {}) {
  FrameSaliency out;
  const auto dyn = part_dynamics(parts_t, parts_prev, attended_instruments(parts_t));
  out.dynamics = dyn.dynamics;
  out.omitted = dyn.omitted;
  FixationSet fixations;
  if (!dyn.dynamics.empty()) {
    out.weights = instrument_weights(dyn.dynamics, params.weights);
    fixations = place_fixations(parts_t, out.weights, params.points_per_part);
  }
  const double sigma = params.sigma > 0 ? params.sigma : default_sigma(parts_t.width());
  out.map = render_saliency<double>(fixations, parts_t.width(), parts_t.height(), sigma);
  out.scanpath = generate_scanpath(std::move(fixations));
  return out;
}

}  // namespace gazeforge

#endif  // GAZEFORGE_SALIENCY_GEN_HPP
