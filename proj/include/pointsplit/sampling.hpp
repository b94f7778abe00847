#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "pointsplit/pointcloud.hpp"

namespace pointsplit::sampling {

using pointcloud::PaintedPointCloud;
using pointcloud::Point3;
using pointcloud::PointCloud;

// Foreground-biased point distance: the euclidean distance is multiplied by w0
// whenever either endpoint belongs to the foreground set. w0 > 1 pushes
// sampling toward foreground points, w0 < 1 away from them.
double biased_distance(const Point3& p1, const Point3& p2, bool p1_foreground,
                       bool p2_foreground, double w0);

struct BiasSpec {
  double w0 = 1.0;
  std::vector<std::size_t> foreground;  // indices into the cloud
};

struct SampleResult {
  std::vector<std::size_t> indices;

  friend bool operator==(const SampleResult&, const SampleResult&) = default;
};

// Greedy farthest point sampling of m points starting at index `start`: each
// step keeps the point whose distance to the selected set is largest, ties
// broken toward the lowest index.
SampleResult fps(const PointCloud& cloud, std::size_t m, std::size_t start = 0);

// Farthest point sampling under the biased distance. With w0 == 1 the result
// is identical to fps().
SampleResult biased_fps(const PaintedPointCloud& painted, std::size_t m, std::size_t start,
                        const BiasSpec& bias);
// Convenience: foreground taken from the painted labels (class != 0).
SampleResult biased_fps(const PaintedPointCloud& painted, std::size_t m, std::size_t start,
                        double w0);

struct BallQuerySpec {
  double radius = 0.0;
  std::size_t k = 1;
};

// For each centroid, the first k point indices (in ascending index order)
// within `radius`; groups are padded to k by repeating the first entry. The
// centroid itself is always in range, so a group is never empty.
std::vector<std::vector<std::size_t>> ball_query(const PointCloud& cloud,
                                                 std::span<const std::size_t> centroids,
                                                 const BallQuerySpec& spec);

// The two-pipeline sampler: half the budget through plain fps, half through
// biased fps over the painted foreground.
std::pair<SampleResult, SampleResult> split_sample(const PaintedPointCloud& painted,
                                                   std::size_t m_total, double w0,
                                                   std::size_t start_normal = 0,
                                                   std::size_t start_bias = 0);

}  // namespace pointsplit::sampling
