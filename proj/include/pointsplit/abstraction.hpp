#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pointsplit/pointcloud.hpp"
#include "pointsplit/sampling.hpp"

namespace pointsplit::abstraction {

using pointcloud::PaintedPointCloud;
using pointcloud::Point3;

// A per-point MLP: input_width -> widths[0] -> ... -> widths.back(), each
// layer an affine map, optional inference-form batchnorm, then ReLU.
struct MlpSpec {
  std::size_t input_width = 0;
  std::vector<std::size_t> widths;
  bool has_bias = true;
  bool has_batchnorm = true;
};

// Stored parameters per layer: weights (in*out), plus `out` each for bias and
// the four batchnorm quantities (gamma, beta, running mean, running variance).
std::uint64_t count_params(std::span<const MlpSpec> specs);
// Multiply-adds per layer per point: in*out for the matmul, `out` for the
// bias add, 2*out for the batchnorm scale and shift, times the point count.
std::uint64_t count_madds(std::span<const MlpSpec> specs,
                          std::span<const std::size_t> points_per_spec);

struct ModelStats {
  std::uint64_t params = 0;
  std::uint64_t madds = 0;
};

// The two feature-propagation blocks of the single-pipeline baseline
// (512->256->256 at 512 and 1024 points) and the narrower fused replacement
// (768->256 at 1024 points).
struct StatsPreset {
  std::string name;
  std::vector<MlpSpec> specs;
  std::vector<std::size_t> points;
};
StatsPreset fp_baseline_preset();
StatsPreset fp_fused_preset();
ModelStats preset_stats(const StatsPreset& preset);

// Named weight arrays addressed as "<prefix>/l<i>/<kind>" (kind in weight,
// bias, bn_gamma, bn_beta, bn_mean, bn_var). Serialized as a JSON manifest
// naming shapes and float offsets into a flat little-endian f32 blob.
class WeightBundle {
 public:
  struct Entry {
    std::vector<std::size_t> shape;
    std::vector<float> values;
  };

  bool contains(const std::string& name) const;
  const Entry& at(const std::string& name) const;  // config_error when missing
  void set(const std::string& name, Entry entry);
  std::vector<std::string> names() const;  // sorted
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, Entry> entries_;
};

// The blob path defaults to the manifest path with its extension replaced by
// ".bin"; manifest offsets are byte offsets into the blob.
WeightBundle load_weights(const std::string& manifest_path);
WeightBundle load_weights(const std::string& manifest_path, const std::string& blob_path);
void save_weights(const WeightBundle& bundle, const std::string& manifest_path);
void save_weights(const WeightBundle& bundle, const std::string& manifest_path,
                  const std::string& blob_path);

// Key list a spec consumes under a prefix ("<prefix>/l<i>/<kind>").
std::vector<std::string> mlp_weight_keys(const std::string& prefix, const MlpSpec& mlp);

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t width = 0;
  std::vector<float> values;  // row-major

  float at(std::size_t r, std::size_t c) const { return values[r * width + c]; }
  void validate() const;
};

// Runs the shared per-point MLP over each neighborhood group and max-pools per
// output channel. Each group member contributes its coordinates relative to
// the group centroid concatenated with its feature row, so point_features must
// be input_width - 3 wide.
FeatureMatrix pointnet_forward(std::span<const std::vector<std::size_t>> groups,
                               std::span<const Point3> points,
                               const FeatureMatrix& point_features,
                               std::span<const Point3> centroids, const MlpSpec& mlp,
                               const WeightBundle& weights, const std::string& prefix);

struct SaLayerConfig {
  std::size_t num_centroids = 0;  // per pipeline
  double radius = 0.0;
  std::size_t k = 0;
  MlpSpec mlp;
  bool biased = false;  // bias pipeline uses foreground-weighted sampling here
};

struct BackboneConfig {
  std::array<SaLayerConfig, 4> sa_layers;
  double w0 = 2.0;
  std::size_t fuse_before_layer = 4;  // pipelines merge before this layer
};

// Default four-layer configuration for a cloud with the given per-point
// feature width and painted class count (classes enter layer 1 one-hot).
BackboneConfig default_backbone_config(std::size_t point_feature_width,
                                       std::uint32_t num_classes);

// Seeded uniform initialization for every array the config references.
WeightBundle random_weights(const BackboneConfig& config, std::uint64_t seed);

struct LayerTrace {
  std::size_t layer = 0;          // 1-based
  std::string pipeline;           // "normal", "bias" or "fused"
  std::size_t num_centroids = 0;
  std::size_t feature_width = 0;  // output width
  std::vector<std::string> weight_keys;
};

struct BackboneResult {
  std::vector<Point3> coords;
  FeatureMatrix features;
  std::vector<LayerTrace> trace;
};

// Two set-abstraction pipelines over the same painted cloud (plain sampling
// vs. foreground-biased sampling on the layers marked biased), fused by
// concatenation before the final layer, which runs once on the union with the
// same shared weights.
BackboneResult run_backbone(const PaintedPointCloud& painted, const BackboneConfig& config,
                            const WeightBundle& weights);

// Inverse-distance interpolation (weights 1/d, normalized) of coarse features
// onto fine positions from each position's k nearest coarse points; an exact
// position match copies that row.
FeatureMatrix fp_interpolate(std::span<const Point3> coarse_coords,
                             const FeatureMatrix& coarse_features,
                             std::span<const Point3> fine_coords,
                             std::size_t k_neighbors = 3);

}  // namespace pointsplit::abstraction
