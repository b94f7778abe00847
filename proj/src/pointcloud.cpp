#include "pointsplit/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pointsplit/binary_io.hpp"

namespace pointsplit::pointcloud {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxPoints = 100'000'000;
constexpr std::uint32_t kMaxFeatureWidth = 65'536;

std::string line_msg(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

long long round_half_up(double v) {
  return static_cast<long long>(std::floor(v + 0.5));
}

}  // namespace

bool is_finite(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

PointCloud::PointCloud(std::vector<Point3> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (!is_finite(points_[i]))
      throw argument_error("point " + std::to_string(i) + " has a non-finite coordinate");
}

PointCloud::PointCloud(std::vector<Point3> points, std::vector<float> features,
                       std::size_t feature_width)
    : PointCloud(std::move(points)) {
  if (features.size() != points_.size() * feature_width)
    throw argument_error("feature block size " + std::to_string(features.size()) +
                         " does not match " + std::to_string(points_.size()) + " points x " +
                         std::to_string(feature_width) + " channels");
  for (std::size_t i = 0; i < features.size(); ++i)
    if (!std::isfinite(features[i]))
      throw argument_error("feature value " + std::to_string(i) + " is non-finite");
  features_ = std::move(features);
  feature_width_ = feature_width;
}

std::span<const float> PointCloud::point_features(std::size_t i) const {
  if (i >= points_.size()) throw argument_error("point index out of range");
  return std::span<const float>(features_).subspan(i * feature_width_, feature_width_);
}

SemanticMask::SemanticMask(std::uint32_t width, std::uint32_t height,
                           std::vector<std::uint16_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
  if (labels_.size() != static_cast<std::size_t>(width_) * height_)
    throw argument_error("label grid has " + std::to_string(labels_.size()) +
                         " entries, expected " + std::to_string(width_) + "x" +
                         std::to_string(height_));
}

std::uint16_t SemanticMask::at(std::uint32_t u, std::uint32_t v) const {
  if (u >= width_ || v >= height_) throw argument_error("pixel out of range");
  return labels_[static_cast<std::size_t>(v) * width_ + u];
}

CameraModel::CameraModel(double fx, double fy, double cx, double cy,
                         const std::array<double, 9>& rotation,
                         const std::array<double, 3>& translation)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), rotation_(rotation), translation_(translation) {
  if (!(fx > 0.0) || !(fy > 0.0)) throw argument_error("focal lengths must be positive");
  for (double v : rotation_)
    if (!std::isfinite(v)) throw argument_error("rotation has a non-finite entry");
  for (double v : translation_)
    if (!std::isfinite(v)) throw argument_error("translation has a non-finite entry");
  // R * R^T must be the identity within 1e-6.
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += rotation_[3 * r + k] * rotation_[3 * c + k];
      double expect = (r == c) ? 1.0 : 0.0;
      if (std::abs(dot - expect) > 1e-6)
        throw argument_error("rotation is not orthonormal");
    }
  }
}

CameraModel CameraModel::identity(double fx, double fy, double cx, double cy) {
  return CameraModel(fx, fy, cx, cy, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0});
}

std::array<double, 3> CameraModel::to_camera(const Point3& p) const {
  std::array<double, 3> w{p.x, p.y, p.z};
  std::array<double, 3> out{};
  for (int r = 0; r < 3; ++r) {
    double acc = translation_[r];
    for (int k = 0; k < 3; ++k) acc += rotation_[3 * r + k] * w[k];
    out[r] = acc;
  }
  return out;
}

PaintedPointCloud::PaintedPointCloud(PointCloud cloud)
    : cloud_(std::move(cloud)), classes_(cloud_.size(), 0), num_classes_(1) {}

PaintedPointCloud::PaintedPointCloud(PointCloud cloud, std::vector<std::uint16_t> classes)
    : cloud_(std::move(cloud)), classes_(std::move(classes)) {
  if (classes_.size() != cloud_.size())
    throw argument_error("class list size does not match point count");
  std::uint32_t max_id = 0;
  for (std::uint16_t c : classes_) max_id = std::max<std::uint32_t>(max_id, c);
  num_classes_ = max_id + 1;
}

PaintedPointCloud::PaintedPointCloud(PointCloud cloud, std::vector<std::uint16_t> classes,
                                     std::uint32_t num_classes)
    : cloud_(std::move(cloud)), classes_(std::move(classes)), num_classes_(num_classes) {
  if (classes_.size() != cloud_.size())
    throw argument_error("class list size does not match point count");
  if (num_classes_ == 0) throw argument_error("num_classes must be at least 1");
  for (std::uint16_t c : classes_)
    if (c >= num_classes_)
      throw argument_error("class id " + std::to_string(c) + " exceeds num_classes " +
                           std::to_string(num_classes_));
}

namespace {

PaintedPointCloud load_cloud_text(std::istream& in) {
  std::vector<Point3> points;
  std::vector<std::uint16_t> classes;
  int arity = 0;  // 3 or 4 once the first data line is seen
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens.size() != 3 && tokens.size() != 4)
      throw parse_error(line_msg(line_no, "expected 3 or 4 columns, got " +
                                              std::to_string(tokens.size())));
    if (arity == 0) arity = static_cast<int>(tokens.size());
    if (static_cast<int>(tokens.size()) != arity)
      throw parse_error(line_msg(line_no, "inconsistent column count"));

    float coord[3];
    for (int i = 0; i < 3; ++i) {
      // strtof instead of stof: subnormals written by the text saver must load
      // back, and stof turns their ERANGE underflow into out_of_range.
      char* parse_end = nullptr;
      float v = std::strtof(tokens[i].c_str(), &parse_end);
      if (parse_end != tokens[i].c_str() + tokens[i].size())
        throw parse_error(line_msg(line_no, "bad coordinate '" + tokens[i] + "'"));
      if (!std::isfinite(v))
        throw parse_error(line_msg(line_no, "non-finite coordinate"));
      coord[i] = v;
    }
    points.push_back(Point3{coord[0], coord[1], coord[2]});

    if (arity == 4) {
      const std::string& c = tokens[3];
      if (c.empty() || c.find_first_not_of("0123456789") != std::string::npos)
        throw parse_error(line_msg(line_no, "bad class id '" + c + "'"));
      unsigned long v = 0;
      try {
        v = std::stoul(c);
      } catch (const std::exception&) {
        throw parse_error(line_msg(line_no, "bad class id '" + c + "'"));
      }
      if (v > 65535) throw parse_error(line_msg(line_no, "class id out of range"));
      classes.push_back(static_cast<std::uint16_t>(v));
    }
  }
  if (arity == 4) return PaintedPointCloud(PointCloud(std::move(points)), std::move(classes));
  return PaintedPointCloud(PointCloud(std::move(points)));
}

PaintedPointCloud load_cloud_binary(std::istream& in) {
  char magic[4];
  binary_io::read_bytes(in, magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw parse_error("bad magic");
  std::uint32_t version = binary_io::read_u32le(in);
  if (version != kVersion)
    throw parse_error("unsupported version " + std::to_string(version));
  std::uint32_t n = binary_io::read_u32le(in);
  std::uint32_t f = binary_io::read_u32le(in);
  if (n > kMaxPoints) throw parse_error("point count out of range");
  if (f > kMaxFeatureWidth) throw parse_error("feature width out of range");
  unsigned char has_labels = 0;
  binary_io::read_bytes(in, &has_labels, 1);
  if (has_labels > 1) throw parse_error("bad label flag");

  std::vector<Point3> points(n);
  std::vector<float> features;
  features.reserve(static_cast<std::size_t>(n) * f);
  for (std::uint32_t i = 0; i < n; ++i) {
    points[i].x = binary_io::read_f32le(in);
    points[i].y = binary_io::read_f32le(in);
    points[i].z = binary_io::read_f32le(in);
    if (!is_finite(points[i]))
      throw parse_error("point " + std::to_string(i) + " has a non-finite coordinate");
    for (std::uint32_t j = 0; j < f; ++j) {
      float v = binary_io::read_f32le(in);
      if (!std::isfinite(v))
        throw parse_error("point " + std::to_string(i) + " has a non-finite feature");
      features.push_back(v);
    }
  }
  std::vector<std::uint16_t> classes;
  if (has_labels) {
    classes.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) classes[i] = binary_io::read_u16le(in);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw parse_error("trailing bytes");

  PointCloud cloud = (f > 0) ? PointCloud(std::move(points), std::move(features), f)
                             : PointCloud(std::move(points));
  if (has_labels) return PaintedPointCloud(std::move(cloud), std::move(classes));
  return PaintedPointCloud(std::move(cloud));
}

void save_cloud_text(const PaintedPointCloud& painted, std::ostream& out) {
  if (painted.cloud().feature_width() != 0)
    throw argument_error("text format cannot represent per-point features");
  bool labeled = std::any_of(painted.classes().begin(), painted.classes().end(),
                             [](std::uint16_t c) { return c != 0; });
  char buf[128];
  for (std::size_t i = 0; i < painted.size(); ++i) {
    const Point3& p = painted.cloud().points()[i];
    if (labeled)
      std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %u\n", p.x, p.y, p.z,
                    static_cast<unsigned>(painted.classes()[i]));
    else
      std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", p.x, p.y, p.z);
    out << buf;
  }
  if (!out) throw io_error("write failed");
}

void save_cloud_binary(const PaintedPointCloud& painted, std::ostream& out) {
  bool labeled = std::any_of(painted.classes().begin(), painted.classes().end(),
                             [](std::uint16_t c) { return c != 0; });
  const PointCloud& cloud = painted.cloud();
  binary_io::write_bytes(out, kMagic, 4);
  binary_io::write_u32le(out, kVersion);
  binary_io::write_u32le(out, static_cast<std::uint32_t>(cloud.size()));
  binary_io::write_u32le(out, static_cast<std::uint32_t>(cloud.feature_width()));
  unsigned char flag = labeled ? 1 : 0;
  binary_io::write_bytes(out, &flag, 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points()[i];
    binary_io::write_f32le(out, p.x);
    binary_io::write_f32le(out, p.y);
    binary_io::write_f32le(out, p.z);
    for (float v : cloud.point_features(i)) binary_io::write_f32le(out, v);
  }
  if (labeled)
    for (std::uint16_t c : painted.classes()) binary_io::write_u16le(out, c);
}

}  // namespace

PaintedPointCloud load_cloud(std::istream& in, CloudFormat format) {
  return format == CloudFormat::text ? load_cloud_text(in) : load_cloud_binary(in);
}

void save_cloud(const PaintedPointCloud& cloud, std::ostream& out, CloudFormat format) {
  if (format == CloudFormat::text)
    save_cloud_text(cloud, out);
  else
    save_cloud_binary(cloud, out);
}

PaintedPointCloud load_cloud_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  char magic[4] = {};
  in.read(magic, 4);
  bool binary = in.gcount() == 4 && std::equal(magic, magic + 4, kMagic);
  in.clear();
  in.seekg(0);
  try {
    return load_cloud(in, binary ? CloudFormat::binary : CloudFormat::text);
  } catch (const parse_error& e) {
    throw parse_error(path + ": " + e.what());
  }
}

PaintedPointCloud load_cloud_file(const std::string& path, CloudFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  try {
    return load_cloud(in, format);
  } catch (const parse_error& e) {
    throw parse_error(path + ": " + e.what());
  }
}

void save_cloud_file(const PaintedPointCloud& cloud, const std::string& path,
                     CloudFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path + " for writing");
  save_cloud(cloud, out, format);
  out.flush();
  if (!out) throw io_error("write to " + path + " failed");
}

PaintedPointCloud paint_points(const PointCloud& cloud, const SemanticMask& mask,
                               const CameraModel& camera) {
  std::vector<std::uint16_t> classes(cloud.size(), 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto cam = camera.to_camera(cloud.points()[i]);
    if (!(cam[2] > 0.0)) continue;
    long long u = round_half_up(camera.fx() * cam[0] / cam[2] + camera.cx());
    long long v = round_half_up(camera.fy() * cam[1] / cam[2] + camera.cy());
    if (u < 0 || v < 0 || u >= static_cast<long long>(mask.width()) ||
        v >= static_cast<long long>(mask.height()))
      continue;
    classes[i] = mask.at(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
  }
  std::uint32_t max_label = 0;
  for (std::uint16_t l : mask.labels()) max_label = std::max<std::uint32_t>(max_label, l);
  return PaintedPointCloud(PointCloud(cloud), std::move(classes), max_label + 1);
}

std::vector<std::size_t> foreground_indices(const PaintedPointCloud& painted) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < painted.size(); ++i)
    if (painted.classes()[i] != 0) out.push_back(i);
  return out;
}

}  // namespace pointsplit::pointcloud
