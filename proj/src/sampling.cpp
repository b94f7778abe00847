#include "pointsplit/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pointsplit/common.hpp"

namespace pointsplit::sampling {

namespace {

double squared_dist(const Point3& a, const Point3& b) {
  double dx = static_cast<double>(a.x) - b.x;
  double dy = static_cast<double>(a.y) - b.y;
  double dz = static_cast<double>(a.z) - b.z;
  return dx * dx + dy * dy + dz * dz;
}

void check_sample_args(std::size_t n, std::size_t m, std::size_t start) {
  if (n == 0) throw argument_error("cannot sample from an empty cloud");
  if (m == 0 || m > n)
    throw argument_error("sample size " + std::to_string(m) + " must be in [1, " +
                         std::to_string(n) + "]");
  if (start >= n) throw argument_error("start index out of range");
}

// Plain and biased fps share this loop; comparisons run on squared distances,
// so the bias enters as w0^2 and the w0 == 1 case is arithmetically identical
// to the unbiased one.
std::vector<std::size_t> fps_impl(std::span<const Point3> pts, std::size_t m,
                                  std::size_t start, const std::vector<char>& foreground,
                                  double w0_sq) {
  const std::size_t n = pts.size();
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<char> selected(n, 0);
  std::vector<std::size_t> out;
  out.reserve(m);

  std::size_t cur = start;
  for (;;) {
    out.push_back(cur);
    selected[cur] = 1;
    if (out.size() == m) break;
    for (std::size_t i = 0; i < n; ++i) {
      if (selected[i]) continue;
      double w_sq = (foreground[i] || foreground[cur]) ? w0_sq : 1.0;
      double d2 = w_sq * squared_dist(pts[i], pts[cur]);
      if (d2 < min_d2[i]) min_d2[i] = d2;
    }
    double best = -1.0;
    std::size_t best_i = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (selected[i]) continue;
      if (min_d2[i] > best) {
        best = min_d2[i];
        best_i = i;
      }
    }
    cur = best_i;
  }
  return out;
}

}  // namespace

double biased_distance(const Point3& p1, const Point3& p2, bool p1_foreground,
                       bool p2_foreground, double w0) {
  if (!(w0 > 0.0) || !std::isfinite(w0)) throw argument_error("w0 must be positive and finite");
  double w = (p1_foreground || p2_foreground) ? w0 : 1.0;
  return w * std::sqrt(squared_dist(p1, p2));
}

SampleResult fps(const PointCloud& cloud, std::size_t m, std::size_t start) {
  check_sample_args(cloud.size(), m, start);
  std::vector<char> foreground(cloud.size(), 0);
  return SampleResult{fps_impl(cloud.points(), m, start, foreground, 1.0)};
}

SampleResult biased_fps(const PaintedPointCloud& painted, std::size_t m, std::size_t start,
                        const BiasSpec& bias) {
  check_sample_args(painted.size(), m, start);
  if (!(bias.w0 > 0.0) || !std::isfinite(bias.w0))
    throw argument_error("w0 must be positive and finite");
  std::vector<char> foreground(painted.size(), 0);
  for (std::size_t idx : bias.foreground) {
    if (idx >= painted.size())
      throw argument_error("foreground index " + std::to_string(idx) + " out of range");
    foreground[idx] = 1;
  }
  return SampleResult{
      fps_impl(painted.cloud().points(), m, start, foreground, bias.w0 * bias.w0)};
}

SampleResult biased_fps(const PaintedPointCloud& painted, std::size_t m, std::size_t start,
                        double w0) {
  return biased_fps(painted, m, start,
                    BiasSpec{w0, pointcloud::foreground_indices(painted)});
}

std::vector<std::vector<std::size_t>> ball_query(const PointCloud& cloud,
                                                 std::span<const std::size_t> centroids,
                                                 const BallQuerySpec& spec) {
  if (!(spec.radius > 0.0) || !std::isfinite(spec.radius))
    throw argument_error("radius must be positive and finite");
  if (spec.k == 0) throw argument_error("group size k must be at least 1");
  const double r2 = spec.radius * spec.radius;
  auto pts = cloud.points();

  std::vector<std::vector<std::size_t>> groups;
  groups.reserve(centroids.size());
  for (std::size_t c : centroids) {
    if (c >= cloud.size())
      throw argument_error("centroid index " + std::to_string(c) + " out of range");
    std::vector<std::size_t> group;
    group.reserve(spec.k);
    for (std::size_t i = 0; i < pts.size() && group.size() < spec.k; ++i)
      if (squared_dist(pts[i], pts[c]) <= r2) group.push_back(i);
    if (group.empty()) group.push_back(c);  // unreachable: c is in its own ball
    while (group.size() < spec.k) group.push_back(group.front());
    groups.push_back(std::move(group));
  }
  return groups;
}

std::pair<SampleResult, SampleResult> split_sample(const PaintedPointCloud& painted,
                                                   std::size_t m_total, double w0,
                                                   std::size_t start_normal,
                                                   std::size_t start_bias) {
  if (m_total == 0 || m_total % 2 != 0)
    throw argument_error("total sample size must be even and positive");
  std::size_t half = m_total / 2;
  SampleResult normal = fps(painted.cloud(), half, start_normal);
  SampleResult biased = biased_fps(painted, half, start_bias, w0);
  return {std::move(normal), std::move(biased)};
}

}  // namespace pointsplit::sampling
