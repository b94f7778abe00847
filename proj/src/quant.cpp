#include "pointsplit/quant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "pointsplit/binary_io.hpp"

namespace pointsplit::quant {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'T', 'N'};
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint64_t kMaxElements = 1'000'000'000;

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

void check_partition(std::size_t channels, std::span<const ChannelSpan> partition) {
  if (partition.empty()) throw argument_error("empty channel partition");
  std::size_t expect = 0;
  for (const ChannelSpan& s : partition) {
    if (s.begin != expect || s.end <= s.begin)
      throw argument_error("channel spans must tile the channel axis in order");
    expect = s.end;
  }
  if (expect != channels)
    throw argument_error("channel partition covers " + std::to_string(expect) +
                         " channels, tensor has " + std::to_string(channels));
}

}  // namespace

std::size_t Tensor::rows() const {
  if (shape.empty()) return 0;
  std::size_t r = 1;
  for (std::size_t i = 0; i + 1 < shape.size(); ++i) r *= shape[i];
  return r;
}

void Tensor::validate() const {
  if (shape.empty()) throw argument_error("tensor rank must be at least 1");
  std::size_t product = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw argument_error("tensor dimensions must be positive");
    product *= d;
  }
  if (product != values.size())
    throw argument_error("tensor has " + std::to_string(values.size()) +
                         " values, shape wants " + std::to_string(product));
  for (float v : values)
    if (!std::isfinite(v)) throw argument_error("tensor contains a non-finite value");
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  t.shape = std::move(shape);
  std::size_t product = 1;
  for (std::size_t d : t.shape) product *= d;
  t.values.assign(product, 0.0f);
  t.validate();
  return t;
}

Tensor load_tensor(std::istream& in) {
  char magic[4];
  binary_io::read_bytes(in, magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw parse_error("bad magic");
  std::uint32_t rank = binary_io::read_u32le(in);
  if (rank == 0 || rank > kMaxRank) throw parse_error("tensor rank out of range");
  Tensor t;
  std::uint64_t product = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    std::uint32_t d = binary_io::read_u32le(in);
    if (d == 0) throw parse_error("tensor dimension is zero");
    product *= d;
    if (product > kMaxElements) throw parse_error("tensor too large");
    t.shape.push_back(d);
  }
  t.values.resize(product);
  for (std::uint64_t i = 0; i < product; ++i) {
    t.values[i] = binary_io::read_f32le(in);
    if (!std::isfinite(t.values[i]))
      throw parse_error("tensor value " + std::to_string(i) + " is non-finite");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw parse_error("trailing bytes");
  return t;
}

void save_tensor(const Tensor& t, std::ostream& out) {
  t.validate();
  binary_io::write_bytes(out, kMagic, 4);
  binary_io::write_u32le(out, static_cast<std::uint32_t>(t.shape.size()));
  for (std::size_t d : t.shape) binary_io::write_u32le(out, static_cast<std::uint32_t>(d));
  for (float v : t.values) binary_io::write_f32le(out, v);
}

Tensor load_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  try {
    return load_tensor(in);
  } catch (const parse_error& e) {
    throw parse_error(path + ": " + e.what());
  }
}

void save_tensor_file(const Tensor& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path + " for writing");
  save_tensor(t, out);
  out.flush();
  if (!out) throw io_error("write to " + path + " failed");
}

QuantParams derive_params(double min_value, double max_value) {
  if (!std::isfinite(min_value) || !std::isfinite(max_value))
    throw argument_error("value range must be finite");
  if (min_value > max_value) throw argument_error("min exceeds max");
  double lo = std::min(min_value, 0.0);
  double hi = std::max(max_value, 0.0);
  if (lo == hi) return QuantParams{1.0, 0};  // all-zero range
  QuantParams p;
  p.scale = (hi - lo) / 255.0;
  int zp = round_half_up(-128.0 - lo / p.scale);
  p.zero_point = std::clamp(zp, -128, 127);
  return p;
}

std::int8_t quantize_value(float x, const QuantParams& p) {
  long q = std::lround(static_cast<double>(x) / p.scale) + p.zero_point;
  return static_cast<std::int8_t>(std::clamp(q, -128L, 127L));
}

float dequantize_value(std::int8_t q, const QuantParams& p) {
  return static_cast<float>(p.scale * (static_cast<int>(q) - p.zero_point));
}

std::size_t RoleLayout::total_channels() const {
  std::size_t total = 0;
  for (const RoleGroup& g : groups) total += g.channels;
  return total;
}

std::vector<ChannelSpan> partition_channels(std::size_t layer_channels,
                                            const Granularity& granularity) {
  if (layer_channels == 0) throw argument_error("layer must have at least one channel");
  std::vector<ChannelSpan> spans;
  if (std::holds_alternative<LayerWise>(granularity)) {
    spans.push_back({0, layer_channels});
  } else if (const auto* even = std::get_if<EvenGroups>(&granularity)) {
    if (even->n == 0 || even->n > layer_channels)
      throw config_error("group count " + std::to_string(even->n) + " must be in [1, " +
                         std::to_string(layer_channels) + "]");
    std::size_t base = layer_channels / even->n;
    std::size_t extra = layer_channels % even->n;
    std::size_t begin = 0;
    for (std::size_t g = 0; g < even->n; ++g) {
      std::size_t width = base + (g < extra ? 1 : 0);
      spans.push_back({begin, begin + width});
      begin += width;
    }
  } else if (std::holds_alternative<ChannelWise>(granularity)) {
    for (std::size_t c = 0; c < layer_channels; ++c) spans.push_back({c, c + 1});
  } else {
    const auto& layout = std::get<RoleWise>(granularity).layout;
    if (layout.groups.empty()) throw config_error("role layout has no groups");
    if (layout.total_channels() != layer_channels)
      throw config_error("role layout covers " + std::to_string(layout.total_channels()) +
                         " channels, layer has " + std::to_string(layer_channels));
    std::size_t begin = 0;
    for (const RoleGroup& g : layout.groups) {
      if (g.channels == 0) throw config_error("role group '" + g.name + "' is empty");
      spans.push_back({begin, begin + g.channels});
      begin += g.channels;
    }
  }
  return spans;
}

QuantizedTensor quantize(const Tensor& t, std::span<const ChannelSpan> partition,
                         std::span<const QuantParams> params) {
  t.validate();
  check_partition(t.channel_count(), partition);
  if (params.size() != partition.size())
    throw argument_error("need one parameter set per channel span");
  for (const QuantParams& p : params)
    if (!(p.scale > 0.0) || !std::isfinite(p.scale))
      throw argument_error("scale must be positive and finite");

  QuantizedTensor out;
  out.shape = t.shape;
  out.partition.assign(partition.begin(), partition.end());
  out.params.assign(params.begin(), params.end());
  out.values.resize(t.values.size());
  const std::size_t channels = t.channel_count();
  const std::size_t rows = t.rows();
  for (std::size_t g = 0; g < partition.size(); ++g) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = partition[g].begin; c < partition[g].end; ++c)
        out.values[r * channels + c] = quantize_value(t.values[r * channels + c], params[g]);
  }
  return out;
}

QuantizedTensor quantize_with(const Tensor& t, const Granularity& granularity) {
  t.validate();
  auto partition = partition_channels(t.channel_count(), granularity);
  const std::size_t channels = t.channel_count();
  const std::size_t rows = t.rows();
  std::vector<QuantParams> params;
  params.reserve(partition.size());
  for (const ChannelSpan& span : partition) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = span.begin; c < span.end; ++c) {
        double v = t.values[r * channels + c];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    params.push_back(derive_params(lo, hi));
  }
  return quantize(t, partition, params);
}

Tensor dequantize(const QuantizedTensor& q) {
  Tensor out;
  out.shape = q.shape;
  out.values.resize(q.values.size());
  std::size_t channels = out.channel_count();
  if (channels == 0) throw argument_error("quantized tensor has no channels");
  check_partition(channels, q.partition);
  if (q.params.size() != q.partition.size())
    throw argument_error("need one parameter set per channel span");
  const std::size_t rows = q.values.size() / channels;
  for (std::size_t g = 0; g < q.partition.size(); ++g)
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = q.partition[g].begin; c < q.partition[g].end; ++c)
        out.values[r * channels + c] =
            dequantize_value(q.values[r * channels + c], q.params[g]);
  out.validate();
  return out;
}

QuantError quant_error(const Tensor& t, const Granularity& granularity) {
  Tensor round_trip = dequantize(quantize_with(t, granularity));
  QuantError err;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    double d = static_cast<double>(t.values[i]) - round_trip.values[i];
    sum_sq += d * d;
    err.max_abs = std::max(err.max_abs, std::abs(d));
  }
  err.mse = t.values.empty() ? 0.0 : sum_sq / static_cast<double>(t.values.size());
  return err;
}

TensorStats calibrate(std::span<const Tensor> samples, std::size_t bins,
                      HistogramRange range_mode) {
  if (samples.empty()) throw argument_error("calibration needs at least one sample");
  if (bins == 0) throw argument_error("histogram needs at least one bin");
  const std::size_t channels = samples[0].channel_count();
  for (const Tensor& t : samples) {
    t.validate();
    if (t.channel_count() != channels)
      throw argument_error("calibration samples must share a channel count");
  }

  TensorStats stats;
  stats.range_mode = range_mode;
  stats.channel_min.assign(channels, std::numeric_limits<double>::infinity());
  stats.channel_max.assign(channels, -std::numeric_limits<double>::infinity());
  for (const Tensor& t : samples) {
    const std::size_t rows = t.rows();
    stats.total_rows += rows;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < channels; ++c) {
        double v = t.at(r, c);
        stats.channel_min[c] = std::min(stats.channel_min[c], v);
        stats.channel_max[c] = std::max(stats.channel_max[c], v);
      }
  }
  stats.min_value = *std::min_element(stats.channel_min.begin(), stats.channel_min.end());
  stats.max_value = *std::max_element(stats.channel_max.begin(), stats.channel_max.end());

  stats.histograms.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    ChannelHistogram& h = stats.histograms[c];
    h.lo = range_mode == HistogramRange::shared ? stats.min_value : stats.channel_min[c];
    h.hi = range_mode == HistogramRange::shared ? stats.max_value : stats.channel_max[c];
    h.counts.assign(bins, 0);
  }
  for (const Tensor& t : samples) {
    const std::size_t rows = t.rows();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < channels; ++c) {
        ChannelHistogram& h = stats.histograms[c];
        double v = t.at(r, c);
        std::size_t bin = 0;
        if (h.hi > h.lo) {
          double rel = (v - h.lo) / (h.hi - h.lo);
          bin = std::min<std::size_t>(static_cast<std::size_t>(rel * static_cast<double>(bins)),
                                      bins - 1);
        }
        ++h.counts[bin];
      }
  }
  return stats;
}

std::vector<std::vector<double>> kl_matrix(const TensorStats& stats, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw argument_error("epsilon must be positive and finite");
  if (stats.range_mode != HistogramRange::shared)
    throw config_error("KL comparison needs histograms over a shared binning");
  const std::size_t channels = stats.histograms.size();
  if (channels == 0) throw argument_error("no histograms to compare");
  const std::size_t bins = stats.histograms[0].counts.size();

  // Smooth and renormalize each histogram into a strictly positive
  // probability vector.
  std::vector<std::vector<double>> probs(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const auto& counts = stats.histograms[c].counts;
    if (counts.size() != bins)
      throw config_error("histograms must share a bin count");
    double total = 0.0;
    probs[c].resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
      probs[c][b] = static_cast<double>(counts[b]) + epsilon;
      total += probs[c][b];
    }
    for (double& p : probs[c]) p /= total;
  }

  std::vector<std::vector<double>> matrix(channels, std::vector<double>(channels, 0.0));
  for (std::size_t i = 0; i < channels; ++i)
    for (std::size_t j = 0; j < channels; ++j) {
      if (i == j) continue;
      double kl = 0.0;
      for (std::size_t b = 0; b < bins; ++b)
        kl += probs[i][b] * std::log(probs[i][b] / probs[j][b]);
      matrix[i][j] = kl;
    }
  return matrix;
}

BlockKlSummary block_kl_summary(const std::vector<std::vector<double>>& matrix,
                                std::span<const ChannelSpan> blocks) {
  const std::size_t channels = matrix.size();
  check_partition(channels, blocks);
  for (const auto& row : matrix)
    if (row.size() != channels) throw argument_error("KL matrix must be square");

  std::vector<std::size_t> block_of(channels, 0);
  for (std::size_t g = 0; g < blocks.size(); ++g)
    for (std::size_t c = blocks[g].begin; c < blocks[g].end; ++c) block_of[c] = g;

  double within_sum = 0.0, cross_sum = 0.0;
  std::uint64_t within_n = 0, cross_n = 0;
  for (std::size_t i = 0; i < channels; ++i)
    for (std::size_t j = 0; j < channels; ++j) {
      if (i == j) continue;
      if (block_of[i] == block_of[j]) {
        within_sum += matrix[i][j];
        ++within_n;
      } else {
        cross_sum += matrix[i][j];
        ++cross_n;
      }
    }
  BlockKlSummary s;
  s.mean_within = within_n ? within_sum / static_cast<double>(within_n) : 0.0;
  s.mean_cross = cross_n ? cross_sum / static_cast<double>(cross_n) : 0.0;
  return s;
}

DatasetSpec sunrgbd_spec() { return DatasetSpec{"sunrgbd", 10, 12}; }
DatasetSpec scannet_spec() { return DatasetSpec{"scannet", 18, 1}; }

RoleLayout role_layout(DetectionModule module, const DatasetSpec& dataset) {
  if (dataset.num_classes == 0 || dataset.heading_bins == 0)
    throw config_error("dataset needs at least one class and one heading bin");
  RoleLayout layout;
  if (module == DetectionModule::voting) {
    layout.groups.push_back({"coords", 3, Role::coords});
    layout.groups.push_back({"features", 256, Role::features});
    return layout;
  }
  // Objectness (2) + heading-bin scores + size-template scores (one template
  // per class) + per-class scores, then heading residuals + 3 size residuals
  // per template.
  std::size_t classification =
      2 + dataset.heading_bins + dataset.num_classes + dataset.num_classes;
  std::size_t regression = dataset.heading_bins + 3 * dataset.num_classes;
  layout.groups.push_back({"coords", 3, Role::coords});
  layout.groups.push_back({"classification", classification, Role::classification});
  layout.groups.push_back({"regression", regression, Role::regression});
  return layout;
}

std::vector<LayerQuantSpec> detection_head_layers(const DatasetSpec& dataset) {
  std::vector<LayerQuantSpec> layers;
  RoleLayout voting = role_layout(DetectionModule::voting, dataset);
  RoleLayout proposal = role_layout(DetectionModule::proposal, dataset);
  layers.push_back({"voting", voting.total_channels(), voting, 2, 2});
  layers.push_back({"proposal", proposal.total_channels(), proposal, 3, 2});
  return layers;
}

std::uint64_t count_quant_params(std::span<const LayerQuantSpec> layers,
                                 GranularityKind kind) {
  if (layers.empty()) throw argument_error("no layers to count");
  std::uint64_t total = 0;
  for (const LayerQuantSpec& layer : layers) {
    if (layer.channels == 0) throw config_error("layer has no channels");
    std::uint64_t groups = 0;
    switch (kind) {
      case GranularityKind::layer:
        groups = 1;
        break;
      case GranularityKind::even_groups:
        if (layer.even_groups == 0 || layer.even_groups > layer.channels)
          throw config_error("even group count out of range");
        groups = layer.even_groups;
        break;
      case GranularityKind::channel:
        groups = layer.channels;
        break;
      case GranularityKind::role_groups:
        if (layer.layout.total_channels() != layer.channels)
          throw config_error("role layout does not cover layer '" + layer.name + "'");
        groups = layer.layout.groups.size();
        break;
    }
    total += groups * layer.quantities * 2;  // a scale and a zero point each
  }
  return total;
}

}  // namespace pointsplit::quant
