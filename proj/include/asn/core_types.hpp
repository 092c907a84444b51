#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace asn {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

// Thrown when an argument lies outside the mathematical domain of an
// operation (non-positive depth, zero-length normal, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Thrown when inputs violate a structural precondition (mismatched sizes,
// malformed configuration).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a reduction has nothing to reduce over (empty joint mask).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Pixel {
  int u = 0;
  int v = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Pinhole camera, x right, y down, z forward.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw ContractError("intrinsics: focal lengths must be positive");
    if (width <= 0 || height <= 0) throw ContractError("intrinsics: image size must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
      throw ContractError("intrinsics: principal point outside the image");
    }
  }

  // Direction of the viewing ray through a pixel center, scaled so z == 1.
  [[nodiscard]] Vec3 ray(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

// Square image whose principal point sits at the image center.
inline Intrinsics default_intrinsics(int res) {
  Intrinsics k;
  k.fx = k.fy = static_cast<double>(res);
  k.cx = k.cy = 0.5 * (res - 1);
  k.width = k.height = res;
  return k;
}

inline Vec2 project(const Vec3& point, const Intrinsics& intr) {
  if (!(point.z() > 0.0)) throw DomainError("project: point must have positive z");
  return {intr.fx * point.x() / point.z() + intr.cx, intr.fy * point.y() / point.z() + intr.cy};
}

/// Row-major grid of values paired with a per-pixel validity mask.
///
/// Instances are immutable once constructed. Derived types add the
/// invariants that are specific to the quantity stored.
template <typename T>
class MaskedRaster {
 public:
  using value_type = T;

  MaskedRaster() = default;
  MaskedRaster(int width, int height, std::vector<T> values, std::vector<std::uint8_t> valid)
      : width_(width), height_(height), values_(std::move(values)), valid_(std::move(valid)) {
    if (width < 0 || height < 0) throw ContractError("raster: negative dimensions");
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (values_.size() != n || valid_.size() != n) {
      throw ContractError("raster: grid length disagrees with width*height");
    }
    for (auto& m : valid_) m = m ? 1 : 0;
  }

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] bool in_bounds(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }
  [[nodiscard]] std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(u);
  }

  [[nodiscard]] const T& operator()(int u, int v) const { return values_[index(u, v)]; }
  [[nodiscard]] const T& at(Pixel p) const { return values_[index(p.u, p.v)]; }
  [[nodiscard]] bool valid(int u, int v) const { return valid_[index(u, v)] != 0; }
  [[nodiscard]] bool valid(Pixel p) const { return valid(p.u, p.v); }

  [[nodiscard]] std::span<const T> values() const { return values_; }
  [[nodiscard]] std::span<const std::uint8_t> mask() const { return valid_; }
  [[nodiscard]] std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto m : valid_) n += m;
    return n;
  }

 protected:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
  std::vector<std::uint8_t> valid_;
};

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ContractError(std::string(what) + ": raster dimensions differ");
  }
}

// Metric depth in meters.
class DepthMap : public MaskedRaster<double> {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, std::vector<double> values, std::vector<std::uint8_t> valid)
      : MaskedRaster(width, height, std::move(values), std::move(valid)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (valid_[i] && !(std::isfinite(values_[i]) && values_[i] > 0.0)) {
        throw ContractError("depth: valid pixel with non-positive or non-finite depth");
      }
    }
  }

  // Every pixel valid.
  DepthMap(int width, int height, std::vector<double> values)
      : DepthMap(width, height, std::move(values),
                 std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 1)) {}
};

// Camera-frame points; valid entries have z > 0.
class PointMap : public MaskedRaster<Vec3> {
 public:
  PointMap() = default;
  PointMap(int width, int height, std::vector<Vec3> points, std::vector<std::uint8_t> valid)
      : MaskedRaster(width, height, std::move(points), std::move(valid)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (valid_[i] && !(values_[i].allFinite() && values_[i].z() > 0.0)) {
        throw ContractError("points: valid point with non-positive z");
      }
    }
  }
};

inline constexpr double kUnitTolerance = 1e-6;

// Unit normals. Camera-facing orientation is checked against a point map by
// is_camera_facing() since the raster alone carries no positions.
class NormalMap : public MaskedRaster<Vec3> {
 public:
  NormalMap() = default;
  NormalMap(int width, int height, std::vector<Vec3> normals, std::vector<std::uint8_t> valid)
      : MaskedRaster(width, height, std::move(normals), std::move(valid)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!valid_[i]) {
        values_[i].setZero();
        continue;
      }
      if (!values_[i].allFinite() || std::abs(values_[i].norm() - 1.0) > kUnitTolerance) {
        throw ContractError("normals: valid normal is not unit length");
      }
    }
  }
};

inline bool is_camera_facing(const NormalMap& normals, const PointMap& points) {
  require_same_shape(normals, points, "is_camera_facing");
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (normals.mask()[i] && points.mask()[i] && !(normals.values()[i].dot(points.values()[i]) < 0.0)) {
      return false;
    }
  }
  return true;
}

// Per-pixel feature vectors steering the similarity kernel.
class GuidanceFeatureMap {
 public:
  GuidanceFeatureMap() = default;
  GuidanceFeatureMap(int width, int height, int channels, std::vector<double> features)
      : width_(width), height_(height), channels_(channels), features_(std::move(features)) {
    if (width < 0 || height < 0) throw ContractError("guidance: negative dimensions");
    if (channels < 1) throw ContractError("guidance: at least one channel required");
    if (features_.size() != static_cast<std::size_t>(width) * height * channels) {
      throw ContractError("guidance: grid length disagrees with width*height*channels");
    }
    for (double x : features_) {
      if (!std::isfinite(x)) throw ContractError("guidance: non-finite feature");
    }
  }

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int channels() const { return channels_; }
  [[nodiscard]] std::span<const double> feature(int u, int v) const {
    const auto offset = (static_cast<std::size_t>(v) * width_ + u) * channels_;
    return std::span<const double>(features_).subspan(offset, static_cast<std::size_t>(channels_));
  }
  [[nodiscard]] std::span<const double> data() const { return features_; }

  // L2 distance between the features of two pixels.
  [[nodiscard]] double distance(Pixel a, Pixel b) const {
    const auto fa = feature(a.u, a.v);
    const auto fb = feature(b.u, b.v);
    double sq = 0.0;
    for (int c = 0; c < channels_; ++c) {
      const double d = fa[c] - fb[c];
      sq += d * d;
    }
    return std::sqrt(sq);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<double> features_;
};

inline GuidanceFeatureMap constant_guidance(int width, int height) {
  return {width, height, 1, std::vector<double>(static_cast<std::size_t>(width) * height, 0.0)};
}

// Integer label per pixel; labels are constant over each analytic surface piece.
class SegmentMap {
 public:
  SegmentMap() = default;
  SegmentMap(int width, int height, std::vector<std::int32_t> labels)
      : width_(width), height_(height), labels_(std::move(labels)) {
    if (labels_.size() != static_cast<std::size_t>(width) * height) {
      throw ContractError("segments: grid length disagrees with width*height");
    }
  }

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] std::int32_t operator()(int u, int v) const { return labels_[static_cast<std::size_t>(v) * width_ + u]; }
  [[nodiscard]] std::span<const std::int32_t> labels() const { return labels_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int32_t> labels_;
};

struct PixelOffset {
  int du = 0;
  int dv = 0;

  friend bool operator==(const PixelOffset&, const PixelOffset&) = default;
};

using Triplet = std::array<PixelOffset, 3>;

/// Candidate local planes drawn around one target pixel.
///
/// `triplets` holds offsets relative to `center`. The remaining arrays run
/// parallel to `triplets` once the candidates have been evaluated; after
/// sampling alone they are empty.
struct TripletSet {
  Pixel center;
  std::vector<Triplet> triplets;
  std::vector<double> areas;
  std::vector<double> confidences;
  std::vector<Vec3> normals;

  [[nodiscard]] bool empty() const { return triplets.empty(); }
  [[nodiscard]] std::size_t size() const { return triplets.size(); }

  friend bool operator==(const TripletSet& a, const TripletSet& b) {
    return a.center == b.center && a.triplets == b.triplets && a.areas == b.areas &&
           a.confidences == b.confidences && a.normals == b.normals;
  }
};

}  // namespace asn
