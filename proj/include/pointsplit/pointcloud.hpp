#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pointsplit/common.hpp"

namespace pointsplit::pointcloud {

struct Point3 {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;

  friend bool operator==(const Point3&, const Point3&) = default;
};

bool is_finite(const Point3& p);

// Points with an optional fixed-width per-point feature block (row-major,
// feature_width floats per point).
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> points);
  PointCloud(std::vector<Point3> points, std::vector<float> features,
             std::size_t feature_width);

  std::size_t size() const { return points_.size(); }
  std::size_t feature_width() const { return feature_width_; }
  std::span<const Point3> points() const { return points_; }
  std::span<const float> features() const { return features_; }
  std::span<const float> point_features(std::size_t i) const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::vector<Point3> points_;
  std::vector<float> features_;
  std::size_t feature_width_ = 0;
};

// Per-pixel class labels, row-major (label of pixel (u, v) is labels[v*width + u]).
// Class 0 is background.
class SemanticMask {
 public:
  SemanticMask(std::uint32_t width, std::uint32_t height,
               std::vector<std::uint16_t> labels);

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::span<const std::uint16_t> labels() const { return labels_; }
  std::uint16_t at(std::uint32_t u, std::uint32_t v) const;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<std::uint16_t> labels_;
};

// Pinhole camera: world point p maps to camera space as R*p + t, then to pixel
// (fx*x/z + cx, fy*y/z + cy). Rotation is row-major and must be orthonormal.
class CameraModel {
 public:
  CameraModel(double fx, double fy, double cx, double cy,
              const std::array<double, 9>& rotation,
              const std::array<double, 3>& translation);

  static CameraModel identity(double fx, double fy, double cx, double cy);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  const std::array<double, 9>& rotation() const { return rotation_; }
  const std::array<double, 3>& translation() const { return translation_; }

  std::array<double, 3> to_camera(const Point3& p) const;

 private:
  double fx_ = 1.0;
  double fy_ = 1.0;
  double cx_ = 0.0;
  double cy_ = 0.0;
  std::array<double, 9> rotation_{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 3> translation_{0, 0, 0};
};

// A point cloud with one semantic class id per point; 0 means background.
class PaintedPointCloud {
 public:
  PaintedPointCloud() = default;
  explicit PaintedPointCloud(PointCloud cloud);  // all points background
  PaintedPointCloud(PointCloud cloud, std::vector<std::uint16_t> classes);
  PaintedPointCloud(PointCloud cloud, std::vector<std::uint16_t> classes,
                    std::uint32_t num_classes);

  std::size_t size() const { return cloud_.size(); }
  const PointCloud& cloud() const { return cloud_; }
  std::span<const std::uint16_t> classes() const { return classes_; }
  std::uint32_t num_classes() const { return num_classes_; }

  friend bool operator==(const PaintedPointCloud&, const PaintedPointCloud&) = default;

 private:
  PointCloud cloud_;
  std::vector<std::uint16_t> classes_;
  std::uint32_t num_classes_ = 1;
};

enum class CloudFormat { text, binary };

// Text format: one `x y z` or `x y z class` line per point, `#` starts a
// comment. All data lines must have the same arity; features cannot be
// represented, so text saves reject feature-bearing clouds.
//
// Binary format: magic "PSPC", u32 version (1), u32 point count, u32 feature
// width, u8 has_labels flag, point count * (3 + feature width) little-endian
// f32 records, then point count little-endian u16 labels when flagged.
PaintedPointCloud load_cloud(std::istream& in, CloudFormat format);
void save_cloud(const PaintedPointCloud& cloud, std::ostream& out, CloudFormat format);

PaintedPointCloud load_cloud_file(const std::string& path);  // sniffs the magic
PaintedPointCloud load_cloud_file(const std::string& path, CloudFormat format);
void save_cloud_file(const PaintedPointCloud& cloud, const std::string& path,
                     CloudFormat format);

// Projects each point through the camera and looks up the mask label at the
// nearest pixel (round half up). Points behind the camera or outside the grid
// become background.
PaintedPointCloud paint_points(const PointCloud& cloud, const SemanticMask& mask,
                               const CameraModel& camera);

std::vector<std::size_t> foreground_indices(const PaintedPointCloud& painted);

}  // namespace pointsplit::pointcloud
