#include "pointsplit/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

#include "pointsplit/binary_io.hpp"

namespace pointsplit::abstraction {

namespace {

constexpr double kBnEps = 1e-5;

void check_mlp(const MlpSpec& mlp) {
  if (mlp.input_width == 0) throw argument_error("mlp input width must be at least 1");
  if (mlp.widths.empty()) throw argument_error("mlp needs at least one layer");
  for (std::size_t w : mlp.widths)
    if (w == 0) throw argument_error("mlp layer widths must be at least 1");
}

std::string default_blob_path(const std::string& manifest_path) {
  std::filesystem::path p(manifest_path);
  p.replace_extension(".bin");
  return p.string();
}

double uniform01(std::mt19937_64& rng) {
  // Top 53 bits -> [0, 1); identical on every platform, unlike the
  // distribution classes.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace

std::uint64_t count_params(std::span<const MlpSpec> specs) {
  std::uint64_t total = 0;
  for (const MlpSpec& spec : specs) {
    check_mlp(spec);
    std::uint64_t in = spec.input_width;
    for (std::size_t out : spec.widths) {
      total += in * out;
      if (spec.has_bias) total += out;
      if (spec.has_batchnorm) total += 4 * out;
      in = out;
    }
  }
  return total;
}

std::uint64_t count_madds(std::span<const MlpSpec> specs,
                          std::span<const std::size_t> points_per_spec) {
  if (specs.size() != points_per_spec.size())
    throw argument_error("need one point count per spec");
  std::uint64_t total = 0;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    check_mlp(specs[s]);
    std::uint64_t per_point = 0;
    std::uint64_t in = specs[s].input_width;
    for (std::size_t out : specs[s].widths) {
      per_point += in * out;
      if (specs[s].has_bias) per_point += out;
      if (specs[s].has_batchnorm) per_point += 2 * out;
      in = out;
    }
    total += per_point * points_per_spec[s];
  }
  return total;
}

StatsPreset fp_baseline_preset() {
  MlpSpec block{512, {256, 256}, true, true};
  return StatsPreset{"fp-pointnet2", {block, block}, {512, 1024}};
}

StatsPreset fp_fused_preset() {
  return StatsPreset{"fp-pointsplit", {MlpSpec{768, {256}, true, true}}, {1024}};
}

ModelStats preset_stats(const StatsPreset& preset) {
  return ModelStats{count_params(preset.specs), count_madds(preset.specs, preset.points)};
}

bool WeightBundle::contains(const std::string& name) const { return entries_.count(name) > 0; }

const WeightBundle::Entry& WeightBundle::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw config_error("weights missing array '" + name + "'");
  return it->second;
}

void WeightBundle::set(const std::string& name, Entry entry) {
  if (name.empty()) throw argument_error("weight name must be nonempty");
  std::size_t product = 1;
  for (std::size_t d : entry.shape) {
    if (d == 0) throw argument_error("weight '" + name + "' has a zero dimension");
    product *= d;
  }
  if (entry.shape.empty() || product != entry.values.size())
    throw argument_error("weight '" + name + "' shape does not match its data");
  for (float v : entry.values)
    if (!std::isfinite(v)) throw argument_error("weight '" + name + "' has a non-finite value");
  entries_[name] = std::move(entry);
}

std::vector<std::string> WeightBundle::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;
}

WeightBundle load_weights(const std::string& manifest_path) {
  return load_weights(manifest_path, default_blob_path(manifest_path));
}

WeightBundle load_weights(const std::string& manifest_path, const std::string& blob_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw io_error("cannot open " + manifest_path);
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(manifest_path + ": " + e.what());
  }
  if (!manifest.is_object()) throw parse_error(manifest_path + ": manifest must be an object");

  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw io_error("cannot open " + blob_path);
  blob.seekg(0, std::ios::end);
  auto blob_size = static_cast<std::uint64_t>(blob.tellg());

  WeightBundle bundle;
  for (const auto& [name, desc] : manifest.items()) {
    if (!desc.is_object() || !desc.contains("shape") || !desc.contains("offset"))
      throw parse_error(manifest_path + ": entry '" + name + "' needs shape and offset");
    WeightBundle::Entry entry;
    std::uint64_t count = 1;
    for (const auto& d : desc["shape"]) {
      if (!d.is_number_unsigned() || d.get<std::uint64_t>() == 0)
        throw parse_error(manifest_path + ": entry '" + name + "' has a bad dimension");
      entry.shape.push_back(d.get<std::size_t>());
      count *= entry.shape.back();
    }
    if (entry.shape.empty())
      throw parse_error(manifest_path + ": entry '" + name + "' has an empty shape");
    if (!desc["offset"].is_number_unsigned())
      throw parse_error(manifest_path + ": entry '" + name + "' has a bad offset");
    std::uint64_t offset = desc["offset"].get<std::uint64_t>();
    if (offset % 4 != 0 || offset + count * 4 > blob_size)
      throw parse_error(blob_path + ": entry '" + name + "' falls outside the blob");

    blob.seekg(static_cast<std::streamoff>(offset));
    entry.values.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) entry.values[i] = binary_io::read_f32le(blob);
    try {
      bundle.set(name, std::move(entry));
    } catch (const argument_error& e) {
      throw parse_error(manifest_path + ": " + e.what());
    }
  }
  return bundle;
}

void save_weights(const WeightBundle& bundle, const std::string& manifest_path) {
  save_weights(bundle, manifest_path, default_blob_path(manifest_path));
}

void save_weights(const WeightBundle& bundle, const std::string& manifest_path,
                  const std::string& blob_path) {
  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw io_error("cannot open " + blob_path + " for writing");
  nlohmann::json manifest = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const std::string& name : bundle.names()) {
    const WeightBundle::Entry& entry = bundle.at(name);
    manifest[name] = {{"shape", entry.shape}, {"offset", offset}};
    for (float v : entry.values) binary_io::write_f32le(blob, v);
    offset += entry.values.size() * 4;
  }
  blob.flush();
  if (!blob) throw io_error("write to " + blob_path + " failed");

  std::ofstream mf(manifest_path);
  if (!mf) throw io_error("cannot open " + manifest_path + " for writing");
  mf << manifest.dump(2) << "\n";
  mf.flush();
  if (!mf) throw io_error("write to " + manifest_path + " failed");
}

void FeatureMatrix::validate() const {
  if (values.size() != rows * width)
    throw argument_error("feature matrix holds " + std::to_string(values.size()) +
                         " values, expected " + std::to_string(rows * width));
  for (float v : values)
    if (!std::isfinite(v)) throw argument_error("feature matrix has a non-finite value");
}

std::vector<std::string> mlp_weight_keys(const std::string& prefix, const MlpSpec& mlp) {
  check_mlp(mlp);
  std::vector<std::string> keys;
  for (std::size_t l = 0; l < mlp.widths.size(); ++l) {
    std::string base = prefix + "/l" + std::to_string(l) + "/";
    keys.push_back(base + "weight");
    if (mlp.has_bias) keys.push_back(base + "bias");
    if (mlp.has_batchnorm)
      for (const char* kind : {"bn_gamma", "bn_beta", "bn_mean", "bn_var"})
        keys.push_back(base + kind);
  }
  return keys;
}

namespace {

// Per-layer views into the bundle, shape-checked against the mlp layout.
struct LayerParams {
  const float* weight;  // out x in, row-major
  const float* bias;    // nullable
  const float* gamma;
  const float* beta;
  const float* mean;
  const float* var;
  std::size_t in = 0;
  std::size_t out = 0;
};

std::vector<LayerParams> resolve_mlp(const WeightBundle& weights, const std::string& prefix,
                                     const MlpSpec& mlp) {
  std::vector<LayerParams> layers;
  std::size_t in = mlp.input_width;
  for (std::size_t l = 0; l < mlp.widths.size(); ++l) {
    std::size_t out = mlp.widths[l];
    std::string base = prefix + "/l" + std::to_string(l) + "/";
    LayerParams p{};
    p.in = in;
    p.out = out;
    const WeightBundle::Entry& w = weights.at(base + "weight");
    if (w.shape != std::vector<std::size_t>{out, in})
      throw config_error("weight '" + base + "weight' has the wrong shape");
    p.weight = w.values.data();
    auto vec = [&](const char* kind) {
      const WeightBundle::Entry& e = weights.at(base + kind);
      if (e.shape != std::vector<std::size_t>{out})
        throw config_error("weight '" + base + kind + "' has the wrong shape");
      return e.values.data();
    };
    if (mlp.has_bias) p.bias = vec("bias");
    if (mlp.has_batchnorm) {
      p.gamma = vec("bn_gamma");
      p.beta = vec("bn_beta");
      p.mean = vec("bn_mean");
      p.var = vec("bn_var");
      for (std::size_t c = 0; c < out; ++c)
        if (p.var[c] < 0.0f)
          throw config_error("weight '" + base + "bn_var' has a negative variance");
    }
    layers.push_back(p);
    in = out;
  }
  return layers;
}

void eval_mlp(const std::vector<LayerParams>& layers, std::vector<double>& x,
              std::vector<double>& scratch) {
  for (const LayerParams& p : layers) {
    scratch.assign(p.out, 0.0);
    for (std::size_t o = 0; o < p.out; ++o) {
      double acc = p.bias ? p.bias[o] : 0.0;
      const float* row = p.weight + o * p.in;
      for (std::size_t i = 0; i < p.in; ++i) acc += static_cast<double>(row[i]) * x[i];
      if (p.gamma)
        acc = p.gamma[o] * (acc - p.mean[o]) / std::sqrt(p.var[o] + kBnEps) + p.beta[o];
      scratch[o] = acc > 0.0 ? acc : 0.0;
    }
    x.swap(scratch);
  }
}

}  // namespace

FeatureMatrix pointnet_forward(std::span<const std::vector<std::size_t>> groups,
                               std::span<const Point3> points,
                               const FeatureMatrix& point_features,
                               std::span<const Point3> centroids, const MlpSpec& mlp,
                               const WeightBundle& weights, const std::string& prefix) {
  check_mlp(mlp);
  point_features.validate();
  if (mlp.input_width < 3) throw argument_error("input width must cover the 3 coordinates");
  if (point_features.width != mlp.input_width - 3)
    throw argument_error("feature width " + std::to_string(point_features.width) +
                         " does not match input width " + std::to_string(mlp.input_width) +
                         " minus 3");
  if (point_features.rows != points.size())
    throw argument_error("need one feature row per point");
  if (groups.size() != centroids.size())
    throw argument_error("need one group per centroid");

  auto layers = resolve_mlp(weights, prefix, mlp);
  const std::size_t out_width = mlp.widths.back();

  FeatureMatrix out;
  out.rows = groups.size();
  out.width = out_width;
  out.values.assign(out.rows * out.width, 0.0f);

  std::vector<double> x, scratch, pooled;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw argument_error("group " + std::to_string(g) + " is empty");
    pooled.assign(out_width, -std::numeric_limits<double>::infinity());
    for (std::size_t member : groups[g]) {
      if (member >= points.size())
        throw argument_error("group member index " + std::to_string(member) + " out of range");
      x.resize(mlp.input_width);
      x[0] = static_cast<double>(points[member].x) - centroids[g].x;
      x[1] = static_cast<double>(points[member].y) - centroids[g].y;
      x[2] = static_cast<double>(points[member].z) - centroids[g].z;
      for (std::size_t c = 0; c < point_features.width; ++c)
        x[3 + c] = point_features.at(member, c);
      eval_mlp(layers, x, scratch);
      for (std::size_t c = 0; c < out_width; ++c) pooled[c] = std::max(pooled[c], x[c]);
    }
    for (std::size_t c = 0; c < out_width; ++c)
      out.values[g * out_width + c] = static_cast<float>(pooled[c]);
  }
  return out;
}

BackboneConfig default_backbone_config(std::size_t point_feature_width,
                                       std::uint32_t num_classes) {
  if (num_classes == 0) throw argument_error("num_classes must be at least 1");
  BackboneConfig cfg;
  std::size_t in0 = 3 + point_feature_width + num_classes;
  cfg.sa_layers[0] = {512, 0.2, 64, MlpSpec{in0, {64, 64, 128}, true, true}, true};
  cfg.sa_layers[1] = {256, 0.4, 32, MlpSpec{3 + 128, {128, 128, 256}, true, true}, true};
  cfg.sa_layers[2] = {128, 0.8, 16, MlpSpec{3 + 256, {128, 128, 256}, true, true}, false};
  cfg.sa_layers[3] = {128, 1.2, 16, MlpSpec{3 + 256, {128, 128, 256}, true, true}, false};
  cfg.w0 = 2.0;
  return cfg;
}

WeightBundle random_weights(const BackboneConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WeightBundle bundle;
  for (std::size_t layer = 0; layer < config.sa_layers.size(); ++layer) {
    const MlpSpec& mlp = config.sa_layers[layer].mlp;
    check_mlp(mlp);
    std::string prefix = "sa" + std::to_string(layer + 1);
    std::size_t in = mlp.input_width;
    for (std::size_t l = 0; l < mlp.widths.size(); ++l) {
      std::size_t out = mlp.widths[l];
      std::string base = prefix + "/l" + std::to_string(l) + "/";
      double bound = std::sqrt(3.0 / static_cast<double>(in));
      WeightBundle::Entry w{{out, in}, {}};
      w.values.reserve(out * in);
      for (std::size_t i = 0; i < out * in; ++i)
        w.values.push_back(static_cast<float>(uniform(rng, -bound, bound)));
      bundle.set(base + "weight", std::move(w));
      auto vec = [&](double lo, double hi) {
        WeightBundle::Entry e{{out}, {}};
        e.values.reserve(out);
        for (std::size_t i = 0; i < out; ++i)
          e.values.push_back(static_cast<float>(uniform(rng, lo, hi)));
        return e;
      };
      if (mlp.has_bias) bundle.set(base + "bias", vec(-0.1, 0.1));
      if (mlp.has_batchnorm) {
        bundle.set(base + "bn_gamma", vec(0.9, 1.1));
        bundle.set(base + "bn_beta", vec(-0.1, 0.1));
        bundle.set(base + "bn_mean", vec(-0.1, 0.1));
        bundle.set(base + "bn_var", vec(0.5, 1.5));
      }
      in = out;
    }
  }
  return bundle;
}

namespace {

struct PipelineState {
  std::vector<Point3> pts;
  FeatureMatrix feats;
  std::vector<std::uint16_t> classes;
};

void check_backbone_config(const BackboneConfig& config, std::size_t feature_width,
                           std::uint32_t num_classes) {
  if (config.fuse_before_layer != 4)
    throw config_error("pipelines must fuse before layer 4");
  if (!(config.w0 > 0.0) || !std::isfinite(config.w0))
    throw config_error("w0 must be positive and finite");
  std::size_t expect_in = 3 + feature_width + num_classes;
  for (std::size_t l = 0; l < config.sa_layers.size(); ++l) {
    const SaLayerConfig& layer = config.sa_layers[l];
    if (layer.num_centroids == 0)
      throw config_error("layer " + std::to_string(l + 1) + " needs at least one centroid");
    if (!(layer.radius > 0.0) || !std::isfinite(layer.radius))
      throw config_error("layer " + std::to_string(l + 1) + " needs a positive radius");
    if (layer.k == 0)
      throw config_error("layer " + std::to_string(l + 1) + " needs a positive ball size");
    check_mlp(layer.mlp);
    if (layer.mlp.input_width != expect_in)
      throw config_error("layer " + std::to_string(l + 1) + " input width " +
                         std::to_string(layer.mlp.input_width) + " does not chain (expected " +
                         std::to_string(expect_in) + ")");
    expect_in = 3 + layer.mlp.widths.back();
  }
}

// One set-abstraction step on a pipeline state.
PipelineState sa_step(const PipelineState& state, const SaLayerConfig& layer,
                      std::size_t num_centroids, bool use_bias, double w0,
                      std::uint32_t num_classes, const WeightBundle& weights,
                      const std::string& prefix) {
  pointcloud::PointCloud cloud(state.pts);
  sampling::SampleResult centroids;
  if (use_bias) {
    pointcloud::PaintedPointCloud painted(cloud, state.classes, num_classes);
    centroids = sampling::biased_fps(painted, num_centroids, 0, w0);
  } else {
    centroids = sampling::fps(cloud, num_centroids, 0);
  }
  auto groups =
      sampling::ball_query(cloud, centroids.indices, {layer.radius, layer.k});

  PipelineState next;
  next.pts.reserve(num_centroids);
  next.classes.reserve(num_centroids);
  for (std::size_t idx : centroids.indices) {
    next.pts.push_back(state.pts[idx]);
    next.classes.push_back(state.classes[idx]);
  }
  next.feats = pointnet_forward(groups, state.pts, state.feats, next.pts, layer.mlp,
                                weights, prefix);
  return next;
}

}  // namespace

BackboneResult run_backbone(const PaintedPointCloud& painted, const BackboneConfig& config,
                            const WeightBundle& weights) {
  const std::size_t feature_width = painted.cloud().feature_width();
  const std::uint32_t num_classes = painted.num_classes();
  check_backbone_config(config, feature_width, num_classes);
  if (painted.size() < 2 * config.sa_layers[0].num_centroids)
    throw argument_error("need at least " +
                         std::to_string(2 * config.sa_layers[0].num_centroids) +
                         " points, got " + std::to_string(painted.size()));

  // Initial per-point features: the cloud's own channels followed by the
  // painted class one-hot.
  PipelineState initial;
  initial.pts.assign(painted.cloud().points().begin(), painted.cloud().points().end());
  initial.classes.assign(painted.classes().begin(), painted.classes().end());
  initial.feats.rows = painted.size();
  initial.feats.width = feature_width + num_classes;
  initial.feats.values.assign(initial.feats.rows * initial.feats.width, 0.0f);
  for (std::size_t i = 0; i < painted.size(); ++i) {
    float* row = initial.feats.values.data() + i * initial.feats.width;
    auto src = painted.cloud().features();
    for (std::size_t c = 0; c < feature_width; ++c) row[c] = src[i * feature_width + c];
    row[feature_width + painted.classes()[i]] = 1.0f;
  }

  BackboneResult result;
  std::array<PipelineState, 2> states{initial, initial};
  const char* names[2] = {"normal", "bias"};
  for (int p = 0; p < 2; ++p) {
    for (std::size_t l = 0; l + 1 < config.sa_layers.size(); ++l) {
      const SaLayerConfig& layer = config.sa_layers[l];
      bool use_bias = (p == 1) && layer.biased;
      std::string prefix = "sa" + std::to_string(l + 1);
      states[p] = sa_step(states[p], layer, layer.num_centroids, use_bias, config.w0,
                          num_classes, weights, prefix);
      result.trace.push_back({l + 1, names[p], layer.num_centroids,
                              layer.mlp.widths.back(), mlp_weight_keys(prefix, layer.mlp)});
    }
  }

  // Fuse by concatenation, then the final layer runs once over the union.
  PipelineState fused;
  fused.pts = states[0].pts;
  fused.pts.insert(fused.pts.end(), states[1].pts.begin(), states[1].pts.end());
  fused.classes = states[0].classes;
  fused.classes.insert(fused.classes.end(), states[1].classes.begin(),
                       states[1].classes.end());
  fused.feats.rows = states[0].feats.rows + states[1].feats.rows;
  fused.feats.width = states[0].feats.width;
  fused.feats.values = states[0].feats.values;
  fused.feats.values.insert(fused.feats.values.end(), states[1].feats.values.begin(),
                            states[1].feats.values.end());

  const SaLayerConfig& last = config.sa_layers.back();
  PipelineState final_state = sa_step(fused, last, 2 * last.num_centroids, false, config.w0,
                                      num_classes, weights, "sa4");
  result.trace.push_back({4, "fused", 2 * last.num_centroids, last.mlp.widths.back(),
                          mlp_weight_keys("sa4", last.mlp)});
  result.coords = std::move(final_state.pts);
  result.features = std::move(final_state.feats);
  return result;
}

FeatureMatrix fp_interpolate(std::span<const Point3> coarse_coords,
                             const FeatureMatrix& coarse_features,
                             std::span<const Point3> fine_coords,
                             std::size_t k_neighbors) {
  if (coarse_coords.empty()) throw argument_error("need at least one coarse point");
  if (k_neighbors == 0) throw argument_error("k_neighbors must be at least 1");
  coarse_features.validate();
  if (coarse_features.rows != coarse_coords.size())
    throw argument_error("need one feature row per coarse point");

  const std::size_t k = std::min(k_neighbors, coarse_coords.size());
  const std::size_t width = coarse_features.width;
  FeatureMatrix out;
  out.rows = fine_coords.size();
  out.width = width;
  out.values.assign(out.rows * width, 0.0f);

  std::vector<std::pair<double, std::size_t>> dist(coarse_coords.size());
  std::vector<double> acc(width);
  for (std::size_t f = 0; f < fine_coords.size(); ++f) {
    for (std::size_t c = 0; c < coarse_coords.size(); ++c) {
      double dx = static_cast<double>(fine_coords[f].x) - coarse_coords[c].x;
      double dy = static_cast<double>(fine_coords[f].y) - coarse_coords[c].y;
      double dz = static_cast<double>(fine_coords[f].z) - coarse_coords[c].z;
      dist[c] = {dx * dx + dy * dy + dz * dz, c};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                      dist.end());
    if (dist[0].first == 0.0) {
      // Exact coincidence: copy that coarse row (lowest index wins ties).
      for (std::size_t c = 0; c < width; ++c)
        out.values[f * width + c] = coarse_features.at(dist[0].second, c);
      continue;
    }
    double weight_sum = 0.0;
    acc.assign(width, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      double w = 1.0 / std::sqrt(dist[j].first);
      weight_sum += w;
      for (std::size_t c = 0; c < width; ++c)
        acc[c] += w * coarse_features.at(dist[j].second, c);
    }
    for (std::size_t c = 0; c < width; ++c)
      out.values[f * width + c] = static_cast<float>(acc[c] / weight_sum);
  }
  return out;
}

}  // namespace pointsplit::abstraction
