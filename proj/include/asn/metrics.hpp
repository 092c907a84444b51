#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "asn/core_types.hpp"
#include "asn/parallel.hpp"

namespace asn {

using MetricRow = std::pair<std::string, double>;

struct DepthMetrics {
  double rel = 0.0;
  double log10 = 0.0;
  double rms = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;

  [[nodiscard]] std::vector<MetricRow> rows() const {
    return {{"rel", rel}, {"log10", log10}, {"rms", rms}, {"delta1", delta1}, {"delta2", delta2}, {"delta3", delta3}};
  }
};

struct NormalMetrics {
  double mean_deg = 0.0;
  double median_deg = 0.0;
  double within_11_25 = 0.0;
  double within_22_5 = 0.0;
  double within_30 = 0.0;

  [[nodiscard]] std::vector<MetricRow> rows() const {
    return {{"mean", mean_deg},
            {"median", median_deg},
            {"within_11.25", within_11_25},
            {"within_22.5", within_22_5},
            {"within_30", within_30}};
  }
};

struct CloudMetrics {
  double dist = 0.0;
  double rms = 0.0;
  double within_0_1 = 0.0;
  double within_0_3 = 0.0;
  double within_0_5 = 0.0;

  [[nodiscard]] std::vector<MetricRow> rows() const {
    return {{"dist", dist}, {"rms", rms}, {"within_0.1m", within_0_1}, {"within_0.3m", within_0_3}, {"within_0.5m", within_0_5}};
  }
};

namespace detail {

inline double mean_of(const std::vector<double>& xs) { return pairwise_sum(xs) / static_cast<double>(xs.size()); }

inline double fraction_below(const std::vector<double>& xs, double threshold) {
  const auto n = std::count_if(xs.begin(), xs.end(), [&](double x) { return x < threshold; });
  return static_cast<double>(n) / static_cast<double>(xs.size());
}

}  // namespace detail

// Lower median: element (n-1)/2 of the sorted values.
inline double lower_median(std::vector<double> xs) {
  if (xs.empty()) throw NumericalError("median of empty set");
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>((xs.size() - 1) / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  return *mid;
}

inline DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt) {
  require_same_shape(pred, gt, "depth_metrics");
  std::vector<double> rel, lg, sq, ratio;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!(pred.mask()[i] && gt.mask()[i])) continue;
    const double d = pred.values()[i];
    const double g = gt.values()[i];
    rel.push_back(std::abs(d - g) / g);
    lg.push_back(std::abs(std::log10(d) - std::log10(g)));
    sq.push_back((d - g) * (d - g));
    ratio.push_back(std::max(d / g, g / d));
  }
  if (rel.empty()) throw NumericalError("depth_metrics: empty joint mask");
  DepthMetrics m;
  m.rel = detail::mean_of(rel);
  m.log10 = detail::mean_of(lg);
  m.rms = std::sqrt(detail::mean_of(sq));
  m.delta1 = detail::fraction_below(ratio, 1.25);
  m.delta2 = detail::fraction_below(ratio, 1.25 * 1.25);
  m.delta3 = detail::fraction_below(ratio, 1.25 * 1.25 * 1.25);
  return m;
}

inline double angle_deg(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.dot(b), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

// Angular errors in degrees over pixels valid in both maps (and in `mask`,
// when given).
inline std::vector<double> angle_errors(const NormalMap& pred, const NormalMap& gt,
                                        std::span<const std::uint8_t> mask = {}) {
  require_same_shape(pred, gt, "angle_errors");
  if (!mask.empty() && mask.size() != gt.size()) throw ContractError("angle_errors: mask size mismatch");
  std::vector<double> out;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!(pred.mask()[i] && gt.mask()[i])) continue;
    if (!mask.empty() && !mask[i]) continue;
    out.push_back(angle_deg(pred.values()[i], gt.values()[i]));
  }
  return out;
}

inline NormalMetrics normal_metrics(const NormalMap& pred, const NormalMap& gt, std::span<const std::uint8_t> mask = {}) {
  const auto err = angle_errors(pred, gt, mask);
  if (err.empty()) throw NumericalError("normal_metrics: empty joint mask");
  NormalMetrics m;
  m.mean_deg = detail::mean_of(err);
  m.median_deg = lower_median(err);
  m.within_11_25 = detail::fraction_below(err, 11.25);
  m.within_22_5 = detail::fraction_below(err, 22.5);
  m.within_30 = detail::fraction_below(err, 30.0);
  return m;
}

// Pixel-wise correspondence: the same pixel in both clouds.
inline CloudMetrics pointcloud_metrics(const PointMap& pred, const PointMap& gt) {
  require_same_shape(pred, gt, "pointcloud_metrics");
  std::vector<double> dist, sq;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!(pred.mask()[i] && gt.mask()[i])) continue;
    const double d = (pred.values()[i] - gt.values()[i]).norm();
    dist.push_back(d);
    sq.push_back(d * d);
  }
  if (dist.empty()) throw NumericalError("pointcloud_metrics: empty joint mask");
  CloudMetrics m;
  m.dist = detail::mean_of(dist);
  m.rms = std::sqrt(detail::mean_of(sq));
  m.within_0_1 = detail::fraction_below(dist, 0.1);
  m.within_0_3 = detail::fraction_below(dist, 0.3);
  m.within_0_5 = detail::fraction_below(dist, 0.5);
  return m;
}

}  // namespace asn
