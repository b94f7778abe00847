#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pointsplit/abstraction.hpp"
#include "pointsplit/quant.hpp"
#include "pointsplit/sampling.hpp"
#include "pointsplit/sched.hpp"

namespace py = pybind11;
using namespace pointsplit;

namespace {

using Xyz = std::vector<std::array<float, 3>>;

pointcloud::PointCloud make_cloud(const Xyz& pts) {
  std::vector<pointcloud::Point3> points;
  points.reserve(pts.size());
  for (const auto& p : pts) points.push_back({p[0], p[1], p[2]});
  return pointcloud::PointCloud(std::move(points));
}

pointcloud::PaintedPointCloud make_painted(const Xyz& pts,
                                           std::vector<std::uint16_t> classes) {
  return pointcloud::PaintedPointCloud(make_cloud(pts), std::move(classes));
}

quant::DatasetSpec dataset_by_name(const std::string& name) {
  if (name == "sunrgbd") return quant::sunrgbd_spec();
  if (name == "scannet") return quant::scannet_spec();
  throw argument_error("unknown dataset: " + name);
}

quant::GranularityKind kind_by_name(const std::string& name) {
  if (name == "layer") return quant::GranularityKind::layer;
  if (name == "group") return quant::GranularityKind::even_groups;
  if (name == "channel") return quant::GranularityKind::channel;
  if (name == "role") return quant::GranularityKind::role_groups;
  throw argument_error("unknown granularity: " + name);
}

quant::Granularity granularity_by_name(const std::string& name) {
  if (name == "layer") return quant::LayerWise{};
  if (name == "channel") return quant::ChannelWise{};
  if (name.rfind("group:", 0) == 0)
    return quant::EvenGroups{std::stoull(name.substr(6))};
  throw argument_error("unknown granularity: " + name);
}

quant::Tensor make_tensor(const std::vector<std::vector<float>>& rows) {
  if (rows.empty()) throw argument_error("tensor needs at least one row");
  quant::Tensor t;
  t.shape = {rows.size(), rows[0].size()};
  for (const auto& row : rows) {
    if (row.size() != rows[0].size()) throw argument_error("ragged tensor rows");
    t.values.insert(t.values.end(), row.begin(), row.end());
  }
  return t;
}

sched::LatencyProfile make_profile(double seg, const std::array<double, 4>& pm,
                                   const std::array<double, 4>& pn, double head) {
  sched::LatencyProfile p;
  p.seg_ms = seg;
  p.pm_ms = pm;
  p.pn_ms = pn;
  p.head_ms = head;
  return p;
}

py::dict timeline_dict(const sched::StageDag& dag) {
  auto tl = sched::simulate(dag);
  py::dict d;
  d["makespan"] = tl.makespan;
  d["busy_a"] = tl.busy_a;
  d["busy_b"] = tl.busy_b;
  d["idle_a"] = tl.idle_a;
  d["idle_b"] = tl.idle_b;
  d["critical_path"] = sched::critical_path(dag);
  py::list entries;
  for (const auto& e : tl.entries) {
    py::dict entry;
    entry["id"] = e.id;
    entry["proc"] = sched::proc_name(e.proc);
    entry["start_ms"] = e.start_ms;
    entry["end_ms"] = e.end_ms;
    entries.append(entry);
  }
  d["entries"] = entries;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "two-pipeline point cloud toolkit";
  m.attr("__version__") = "0.1.0";

  m.def(
      "fps",
      [](const Xyz& points, std::size_t m, std::size_t start) {
        return sampling::fps(make_cloud(points), m, start).indices;
      },
      py::arg("points"), py::arg("m"), py::arg("start") = 0,
      "Farthest point sampling; returns the selected indices.");

  m.def(
      "biased_fps",
      [](const Xyz& points, const std::vector<std::uint16_t>& classes, std::size_t m,
         std::size_t start, double w0) {
        return sampling::biased_fps(make_painted(points, classes), m, start, w0)
            .indices;
      },
      py::arg("points"), py::arg("classes"), py::arg("m"), py::arg("start") = 0,
      py::arg("w0") = 1.0,
      "Foreground-biased farthest point sampling over per-point class labels.");

  m.def(
      "split_sample",
      [](const Xyz& points, const std::vector<std::uint16_t>& classes,
         std::size_t m_total, double w0, std::size_t start_normal,
         std::size_t start_bias) {
        auto [normal, bias] = sampling::split_sample(make_painted(points, classes),
                                                     m_total, w0, start_normal,
                                                     start_bias);
        return py::make_tuple(normal.indices, bias.indices);
      },
      py::arg("points"), py::arg("classes"), py::arg("m_total"), py::arg("w0"),
      py::arg("start_normal") = 0, py::arg("start_bias") = 0,
      "Half the budget through plain fps, half through biased fps.");

  m.def(
      "ball_query",
      [](const Xyz& points, const std::vector<std::size_t>& centroids, double radius,
         std::size_t k) {
        return sampling::ball_query(make_cloud(points), centroids, {radius, k});
      },
      py::arg("points"), py::arg("centroids"), py::arg("radius"), py::arg("k") = 16,
      "Indices of up to k in-radius neighbours per centroid, padded to k.");

  m.def(
      "count_params",
      [](std::size_t input_width, const std::vector<std::size_t>& widths, bool bias,
         bool batchnorm) {
        abstraction::MlpSpec spec{input_width, widths, bias, batchnorm};
        return abstraction::count_params({&spec, 1});
      },
      py::arg("input_width"), py::arg("widths"), py::arg("bias") = true,
      py::arg("batchnorm") = true, "Learnable parameter count of one shared mlp.");

  m.def(
      "count_madds",
      [](std::size_t input_width, const std::vector<std::size_t>& widths, bool bias,
         bool batchnorm, std::size_t points) {
        abstraction::MlpSpec spec{input_width, widths, bias, batchnorm};
        std::size_t pts[] = {points};
        return abstraction::count_madds({&spec, 1}, pts);
      },
      py::arg("input_width"), py::arg("widths"), py::arg("bias") = true,
      py::arg("batchnorm") = true, py::arg("points") = 1,
      "Multiply-adds of one shared mlp over a point batch.");

  m.def(
      "preset_stats",
      [](const std::string& name) {
        abstraction::StatsPreset preset;
        if (name == "fp-pointnet2")
          preset = abstraction::fp_baseline_preset();
        else if (name == "fp-pointsplit")
          preset = abstraction::fp_fused_preset();
        else
          throw argument_error("unknown preset: " + name);
        auto stats = abstraction::preset_stats(preset);
        return py::make_tuple(stats.params, stats.madds);
      },
      py::arg("name"), "(params, madds) of a named feature-propagation preset.");

  m.def(
      "count_quant_params",
      [](const std::string& dataset, const std::string& granularity) {
        auto layers = quant::detection_head_layers(dataset_by_name(dataset));
        return quant::count_quant_params(layers, kind_by_name(granularity));
      },
      py::arg("dataset") = "sunrgbd", py::arg("granularity") = "role",
      "Stored quantization parameters for both detection head layers.");

  m.def(
      "derive_params",
      [](double min_value, double max_value) {
        auto p = quant::derive_params(min_value, max_value);
        return py::make_tuple(p.scale, p.zero_point);
      },
      py::arg("min_value"), py::arg("max_value"),
      "(scale, zero_point) of the int8 grid covering [min, max].");

  m.def(
      "quant_roundtrip",
      [](const std::vector<std::vector<float>>& rows, const std::string& granularity) {
        auto t = make_tensor(rows);
        auto back = quant::dequantize(
            quant::quantize_with(t, granularity_by_name(granularity)));
        std::vector<std::vector<float>> out(rows.size());
        std::size_t channels = t.shape[1];
        for (std::size_t r = 0; r < rows.size(); ++r)
          out[r].assign(back.values.begin() + r * channels,
                        back.values.begin() + (r + 1) * channels);
        return out;
      },
      py::arg("values"), py::arg("granularity") = "layer",
      "Quantize to int8 and back under 'layer', 'channel' or 'group:N'.");

  m.def(
      "quant_error",
      [](const std::vector<std::vector<float>>& rows, const std::string& granularity) {
        auto err = quant::quant_error(make_tensor(rows), granularity_by_name(granularity));
        return py::make_tuple(err.mse, err.max_abs);
      },
      py::arg("values"), py::arg("granularity") = "layer",
      "(mse, max_abs) round-trip error of int8 quantization.");

  m.def(
      "estimate_comm",
      [](double t_total, double t2_total) {
        auto e = sched::estimate_comm(t_total, t2_total);
        return py::make_tuple(e.t_comp, e.t_comm);
      },
      py::arg("t_total"), py::arg("t2_total"),
      "(computation, communication) split from a doubled-computation rerun.");

  m.def(
      "schedule",
      [](double seg, const std::array<double, 4>& pm, const std::array<double, 4>& pn,
         double head, const std::string& mode, double split_factor, double transfer) {
        auto profile = make_profile(seg, pm, pn, head);
        if (mode == "naive") return timeline_dict(sched::build_naive(profile, transfer));
        if (mode == "split")
          return timeline_dict(sched::build_split(profile, split_factor, transfer));
        throw argument_error("unknown mode: " + mode);
      },
      py::arg("seg"), py::arg("pm"), py::arg("pn"), py::arg("head"),
      py::arg("mode") = "naive", py::arg("split_factor") = 0.5,
      py::arg("transfer") = 0.0,
      "Simulate the two-processor pipeline; returns timeline and idle stats.");
}
