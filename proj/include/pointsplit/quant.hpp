#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pointsplit/common.hpp"

namespace pointsplit::quant {

// Dense row-major float tensor; the last dimension is the channel axis.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> values;

  std::size_t channel_count() const { return shape.empty() ? 0 : shape.back(); }
  std::size_t rows() const;
  float at(std::size_t row, std::size_t channel) const {
    return values[row * channel_count() + channel];
  }
  void validate() const;  // argument_error on shape/value mismatch
  static Tensor zeros(std::vector<std::size_t> shape);
};

// Binary tensor format: magic "PSTN", u32 rank, rank u32 dims, then the
// little-endian f32 payload in row-major order.
Tensor load_tensor(std::istream& in);
void save_tensor(const Tensor& t, std::ostream& out);
Tensor load_tensor_file(const std::string& path);
void save_tensor_file(const Tensor& t, const std::string& path);

// Asymmetric int8 affine quantization: q = clamp(round(x / scale) + zero_point)
// with the representable range always containing real zero exactly.
struct QuantParams {
  double scale = 1.0;
  int zero_point = 0;

  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

// Derives scale and zero point from an observed value range. The range is
// first expanded to include 0, scale spans it over 256 levels, and the zero
// point is nudged to an integer so 0 quantizes exactly.
QuantParams derive_params(double min_value, double max_value);

std::int8_t quantize_value(float x, const QuantParams& p);
float dequantize_value(std::int8_t q, const QuantParams& p);

// Half-open channel range [begin, end).
struct ChannelSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t width() const { return end - begin; }
  friend bool operator==(const ChannelSpan&, const ChannelSpan&) = default;
};

enum class Role { coords, classification, regression, features };

struct RoleGroup {
  std::string name;
  std::size_t channels = 0;
  Role role = Role::features;
};

struct RoleLayout {
  std::vector<RoleGroup> groups;

  std::size_t total_channels() const;
};

// Quantization granularities: one parameter set for the whole layer, n
// same-sized groups, one per channel, or one per semantic role group.
struct LayerWise {};
struct EvenGroups {
  std::size_t n = 1;
};
struct ChannelWise {};
struct RoleWise {
  RoleLayout layout;
};
using Granularity = std::variant<LayerWise, EvenGroups, ChannelWise, RoleWise>;

// Splits [0, layer_channels) into the contiguous spans the granularity
// dictates. Even groups are balanced: the first (channels mod n) groups get
// one extra channel.
std::vector<ChannelSpan> partition_channels(std::size_t layer_channels,
                                            const Granularity& granularity);

struct QuantizedTensor {
  std::vector<std::size_t> shape;
  std::vector<std::int8_t> values;
  std::vector<ChannelSpan> partition;
  std::vector<QuantParams> params;  // parallel to partition
};

// Quantizes with explicit per-span parameters; the spans must tile the channel
// axis in ascending order.
QuantizedTensor quantize(const Tensor& t, std::span<const ChannelSpan> partition,
                         std::span<const QuantParams> params);
// Calibrates each span from the tensor's own value range, then quantizes.
QuantizedTensor quantize_with(const Tensor& t, const Granularity& granularity);
Tensor dequantize(const QuantizedTensor& q);

struct QuantError {
  double mse = 0.0;
  double max_abs = 0.0;
};
QuantError quant_error(const Tensor& t, const Granularity& granularity);

// Activation calibration: value ranges and per-channel histograms collected
// over a batch of tensors with a common channel count.
struct ChannelHistogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::uint64_t> counts;
};

enum class HistogramRange {
  per_channel,  // each channel binned over its own [min, max]
  shared,       // every channel binned over the global [min, max]
};

struct TensorStats {
  double min_value = 0.0;
  double max_value = 0.0;
  std::vector<double> channel_min;
  std::vector<double> channel_max;
  std::vector<ChannelHistogram> histograms;
  std::uint64_t total_rows = 0;
  HistogramRange range_mode = HistogramRange::per_channel;
};

TensorStats calibrate(std::span<const Tensor> samples, std::size_t bins = 2048,
                      HistogramRange range_mode = HistogramRange::per_channel);

// Pairwise KL divergence KL(P_i || P_j) between the epsilon-smoothed,
// renormalized channel histograms. Requires shared-range histograms, since
// per-channel binnings are not comparable.
std::vector<std::vector<double>> kl_matrix(const TensorStats& stats,
                                           double epsilon = 1e-10);

struct BlockKlSummary {
  double mean_within = 0.0;
  double mean_cross = 0.0;
};
// Means over ordered channel pairs (i != j) inside one block vs across blocks.
BlockKlSummary block_kl_summary(const std::vector<std::vector<double>>& matrix,
                                std::span<const ChannelSpan> blocks);

// Detection-head channel layouts.
enum class DetectionModule { voting, proposal };

struct DatasetSpec {
  std::string name;
  std::size_t num_classes = 0;
  std::size_t heading_bins = 0;
};
DatasetSpec sunrgbd_spec();  // 10 classes, 12 heading bins
DatasetSpec scannet_spec();  // 18 classes, axis-aligned boxes (1 heading bin)

// Voting output: 3 offset coords + 256 features. Proposal output: 3 coords,
// then classification scores (objectness, heading bins, size templates, class
// scores), then regression residuals (heading, 3 per size template).
RoleLayout role_layout(DetectionModule module, const DatasetSpec& dataset);

struct LayerQuantSpec {
  std::string name;
  std::size_t channels = 0;
  RoleLayout layout;
  std::size_t even_groups = 1;
  std::size_t quantities = 2;  // weights and activations
};
enum class GranularityKind { layer, even_groups, channel, role_groups };

// Both quantized head layers (voting + proposal) for a dataset.
std::vector<LayerQuantSpec> detection_head_layers(const DatasetSpec& dataset);

// Number of stored quantization parameters (a scale and a zero point per
// group, for each quantized quantity of each layer).
std::uint64_t count_quant_params(std::span<const LayerQuantSpec> layers,
                                 GranularityKind kind);

}  // namespace pointsplit::quant
