// Command-line surface over the library: sampling, painting, the two-pipeline
// backbone, model statistics, quantization, divergence maps and schedule
// simulation. Every run prints one JSON report to stdout; diagnostics go to
// stderr. Exit codes: 0 success, 1 I/O, 2 argument/configuration, 3 internal.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pointsplit/abstraction.hpp"
#include "pointsplit/pointcloud.hpp"
#include "pointsplit/quant.hpp"
#include "pointsplit/sampling.hpp"
#include "pointsplit/sched.hpp"
#include "pointsplit/svg.hpp"

using json = nlohmann::json;
using namespace pointsplit;

namespace {

constexpr const char* kVersion = "0.1.0";

// Relative output paths land in $POINTSPLIT_OUT_DIR when it is set.
std::string resolve_out(const std::string& path) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  const char* dir = std::getenv("POINTSPLIT_OUT_DIR");
  if (!dir || !*dir) return path;
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / p).string();
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) throw io_error("write to " + path + " failed");
}

void print_report(const std::string& command, json config, json result, double duration_ms) {
  json report{{"version", kVersion},
              {"command", command},
              {"config", std::move(config)},
              {"result", std::move(result)},
              {"duration_ms", duration_ms}};
  std::cout << report.dump(2) << "\n";
}

// ---- sample ----------------------------------------------------------------

struct SampleOptions {
  std::vector<std::string> inputs;
  std::size_t m = 0;
  double w0 = 2.0;
  std::size_t start = 0;
  std::size_t start_bias = 0;
  bool split = false;
  double radius = 0.0;
  std::size_t k = 16;
  std::size_t jobs = 1;
};

json sample_one(const SampleOptions& opt, const std::string& path) {
  auto painted = pointcloud::load_cloud_file(path);
  json out{{"file", path}, {"points", painted.size()}};
  if (opt.split) {
    auto [normal, bias] =
        sampling::split_sample(painted, opt.m, opt.w0, opt.start, opt.start_bias);
    out["normal"] = normal.indices;
    out["bias"] = bias.indices;
  } else {
    auto picks = sampling::biased_fps(painted, opt.m, opt.start, opt.w0);
    out["indices"] = picks.indices;
    if (opt.radius > 0.0) {
      auto groups =
          sampling::ball_query(painted.cloud(), picks.indices, {opt.radius, opt.k});
      out["groups"] = groups;
    }
  }
  return out;
}

json run_sample(const SampleOptions& opt) {
  std::vector<json> payloads(opt.inputs.size());
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= opt.inputs.size()) return;
      try {
        payloads[i] = sample_one(opt, opt.inputs[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::size_t threads = std::min<std::size_t>(std::max<std::size_t>(opt.jobs, 1),
                                              opt.inputs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return json{{"clouds", payloads}};
}

// ---- paint -----------------------------------------------------------------

struct PaintOptions {
  std::string input;
  std::string mask_path;
  std::string camera_path;
  std::string out;
  std::string format = "binary";
};

pointcloud::SemanticMask load_mask(const std::string& path) {
  json j = load_json_file(path);
  try {
    if (!j.is_object() || !j.contains("width") || !j.contains("height") ||
        !j.contains("labels") || !j["labels"].is_array())
      throw parse_error(path + ": mask needs width, height and a labels array");
    auto width = j["width"].get<std::uint32_t>();
    auto height = j["height"].get<std::uint32_t>();
    std::vector<std::uint16_t> labels;
    for (const auto& v : j["labels"]) {
      auto value = v.get<std::uint64_t>();
      if (value > 0xffff) throw parse_error(path + ": label out of range");
      labels.push_back(static_cast<std::uint16_t>(value));
    }
    return {width, height, std::move(labels)};
  } catch (const json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
}

pointcloud::CameraModel load_camera(const std::string& path) {
  json j = load_json_file(path);
  try {
    for (const char* key : {"fx", "fy", "cx", "cy"})
      if (!j.contains(key)) throw parse_error(path + ": camera needs fx, fy, cx, cy");
    std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
    std::array<double, 3> translation{0, 0, 0};
    if (j.contains("rotation")) {
      if (j["rotation"].size() != 9)
        throw parse_error(path + ": rotation must hold 9 row-major entries");
      for (std::size_t i = 0; i < 9; ++i) rotation[i] = j["rotation"][i].get<double>();
    }
    if (j.contains("translation")) {
      if (j["translation"].size() != 3)
        throw parse_error(path + ": translation must hold 3 entries");
      for (std::size_t i = 0; i < 3; ++i)
        translation[i] = j["translation"][i].get<double>();
    }
    return {j["fx"].get<double>(), j["fy"].get<double>(), j["cx"].get<double>(),
            j["cy"].get<double>(), rotation, translation};
  } catch (const json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
}

json run_paint(const PaintOptions& opt) {
  auto cloud = pointcloud::load_cloud_file(opt.input).cloud();
  auto mask = load_mask(opt.mask_path);
  auto camera = load_camera(opt.camera_path);
  auto painted = pointcloud::paint_points(cloud, mask, camera);

  json out{{"points", painted.size()},
           {"num_classes", painted.num_classes()},
           {"foreground", pointcloud::foreground_indices(painted).size()}};
  if (!opt.out.empty()) {
    auto path = resolve_out(opt.out);
    auto format =
        opt.format == "text" ? pointcloud::CloudFormat::text : pointcloud::CloudFormat::binary;
    pointcloud::save_cloud_file(painted, path, format);
    out["out"] = path;
  }
  return out;
}

// ---- backbone ----------------------------------------------------------------

struct BackboneOptions {
  std::string input;
  std::string weights;
  std::string out;
  std::uint64_t seed = 0;
};

json run_backbone_cmd(const BackboneOptions& opt) {
  auto painted = pointcloud::load_cloud_file(opt.input);
  auto config = abstraction::default_backbone_config(painted.cloud().feature_width(),
                                                     painted.num_classes());
  abstraction::WeightBundle weights = opt.weights.empty()
                                          ? abstraction::random_weights(config, opt.seed)
                                          : abstraction::load_weights(opt.weights);
  auto result = abstraction::run_backbone(painted, config, weights);

  json layers = json::array();
  for (const auto& t : result.trace)
    layers.push_back({{"layer", t.layer},
                      {"pipeline", t.pipeline},
                      {"centroids", t.num_centroids},
                      {"width", t.feature_width}});
  json out{{"coords", result.coords.size()},
           {"feature_width", result.features.width},
           {"layers", layers}};
  if (!opt.out.empty()) {
    auto path = resolve_out(opt.out);
    quant::Tensor fused;
    fused.shape = {result.features.rows, result.features.width};
    fused.values = result.features.values;
    quant::save_tensor_file(fused, path);
    out["out"] = path;
  }
  return out;
}

// ---- stats ---------------------------------------------------------------------

struct StatsOptions {
  std::string preset;
  std::string spec_path;
};

json run_stats(const StatsOptions& opt) {
  abstraction::StatsPreset preset;
  if (!opt.preset.empty()) {
    if (opt.preset == "fp-pointnet2")
      preset = abstraction::fp_baseline_preset();
    else if (opt.preset == "fp-pointsplit")
      preset = abstraction::fp_fused_preset();
    else
      throw argument_error("unknown preset '" + opt.preset + "'");
  } else {
    json j = load_json_file(opt.spec_path);
    try {
      if (!j.is_array() || j.empty())
        throw parse_error(opt.spec_path + ": spec must be a nonempty array");
      preset.name = "custom";
      for (const auto& item : j) {
        abstraction::MlpSpec spec;
        spec.input_width = item.at("input_width").get<std::size_t>();
        spec.widths = item.at("widths").get<std::vector<std::size_t>>();
        spec.has_bias = item.value("bias", true);
        spec.has_batchnorm = item.value("batchnorm", true);
        preset.specs.push_back(std::move(spec));
        preset.points.push_back(item.value("points", std::size_t{1}));
      }
    } catch (const json::exception& e) {
      throw parse_error(opt.spec_path + ": " + e.what());
    }
  }
  auto stats = abstraction::preset_stats(preset);
  return json{{"name", preset.name}, {"params", stats.params}, {"madds", stats.madds}};
}

// ---- quantize -------------------------------------------------------------------

struct QuantizeOptions {
  std::string input;
  std::string granularity = "layer";
  std::string layout = "sunrgbd";
};

quant::GranularityKind parse_kind(const std::string& s, std::size_t& even_n) {
  if (s == "layer") return quant::GranularityKind::layer;
  if (s == "channel") return quant::GranularityKind::channel;
  if (s == "role") return quant::GranularityKind::role_groups;
  if (s.rfind("group:", 0) == 0) {
    try {
      even_n = std::stoull(s.substr(6));
    } catch (const std::exception&) {
      throw argument_error("bad group count in '" + s + "'");
    }
    if (even_n == 0) throw argument_error("group count must be at least 1");
    return quant::GranularityKind::even_groups;
  }
  throw argument_error("unknown granularity '" + s +
                       "' (expected layer, group:N, channel or role)");
}

json run_quantize(const QuantizeOptions& opt) {
  using namespace quant;
  DatasetSpec dataset;
  if (opt.layout == "sunrgbd")
    dataset = sunrgbd_spec();
  else if (opt.layout == "scannet")
    dataset = scannet_spec();
  else
    throw argument_error("unknown layout '" + opt.layout + "'");

  std::size_t even_n = 3;
  GranularityKind kind = parse_kind(opt.granularity, even_n);
  auto layers = detection_head_layers(dataset);
  if (kind == GranularityKind::even_groups)
    for (auto& layer : layers) layer.even_groups = even_n;

  json out{{"layout", dataset.name},
           {"param_count", count_quant_params(layers, kind)}};

  if (!opt.input.empty()) {
    Tensor t = load_tensor_file(opt.input);
    Granularity g = LayerWise{};
    switch (kind) {
      case GranularityKind::layer: g = LayerWise{}; break;
      case GranularityKind::even_groups: g = EvenGroups{even_n}; break;
      case GranularityKind::channel: g = ChannelWise{}; break;
      case GranularityKind::role_groups: {
        RoleLayout layout;
        bool matched = false;
        for (auto module : {DetectionModule::voting, DetectionModule::proposal}) {
          auto candidate = role_layout(module, dataset);
          if (candidate.total_channels() == t.channel_count()) {
            layout = candidate;
            matched = true;
            break;
          }
        }
        if (!matched)
          throw config_error("no role layout of " + opt.layout + " has " +
                             std::to_string(t.channel_count()) + " channels");
        g = RoleWise{layout};
        break;
      }
    }
    auto err = quant_error(t, g);
    out["channels"] = t.channel_count();
    out["groups"] = partition_channels(t.channel_count(), g).size();
    out["quant_error"] = {{"mse", err.mse}, {"max_abs", err.max_abs}};
  }
  return out;
}

// ---- klmap ---------------------------------------------------------------------

struct KlmapOptions {
  std::vector<std::string> inputs;
  std::size_t bins = 128;
  double epsilon = 1e-10;
  std::string blocks;
  std::string out;
  std::string format = "csv";
};

json run_klmap(const KlmapOptions& opt) {
  std::vector<quant::Tensor> tensors;
  for (const auto& path : opt.inputs) tensors.push_back(quant::load_tensor_file(path));
  auto stats = quant::calibrate(tensors, opt.bins, quant::HistogramRange::shared);
  auto matrix = quant::kl_matrix(stats, opt.epsilon);

  double max_divergence = 0.0;
  for (const auto& row : matrix)
    for (double v : row) max_divergence = std::max(max_divergence, v);
  json out{{"channels", matrix.size()},
           {"bins", opt.bins},
           {"max_divergence", max_divergence}};

  if (!opt.blocks.empty()) {
    std::vector<quant::ChannelSpan> spans;
    std::size_t begin = 0;
    std::string item;
    std::istringstream list(opt.blocks);
    while (std::getline(list, item, ',')) {
      std::size_t width = 0;
      try {
        width = std::stoull(item);
      } catch (const std::exception&) {
        throw argument_error("bad block width '" + item + "'");
      }
      spans.push_back({begin, begin + width});
      begin += width;
    }
    if (begin != matrix.size())
      throw argument_error("block widths sum to " + std::to_string(begin) + ", expected " +
                           std::to_string(matrix.size()));
    auto summary = quant::block_kl_summary(matrix, spans);
    out["blocks"] = {{"mean_within", summary.mean_within},
                     {"mean_cross", summary.mean_cross}};
  }

  if (!opt.out.empty()) {
    auto path = resolve_out(opt.out);
    if (opt.format == "svg") {
      write_text_file(path, svg::heatmap_svg(matrix));
    } else {
      std::string csv;
      char buf[64];
      for (const auto& row : matrix) {
        for (std::size_t c = 0; c < row.size(); ++c) {
          std::snprintf(buf, sizeof buf, "%.9g", row[c]);
          csv += buf;
          csv += (c + 1 < row.size()) ? ',' : '\n';
        }
      }
      write_text_file(path, csv);
    }
    out["out"] = path;
  }
  return out;
}

// ---- schedule -------------------------------------------------------------------

struct ScheduleOptions {
  std::string profile_path;
  std::string dag_path;
  std::string mode = "naive";
  double split_factor = 0.5;
  double transfer_ms = 0.0;
  std::string out;
  std::string format = "csv";
};

sched::LatencyProfile load_profile(const std::string& path) {
  json j = load_json_file(path);
  try {
    sched::LatencyProfile profile;
    profile.seg_ms = j.at("seg").get<double>();
    profile.head_ms = j.at("head").get<double>();
    auto pm = j.at("pm").get<std::vector<double>>();
    auto pn = j.at("pn").get<std::vector<double>>();
    if (pm.size() != 4 || pn.size() != 4)
      throw parse_error(path + ": pm and pn must hold 4 entries each");
    for (std::size_t i = 0; i < 4; ++i) {
      profile.pm_ms[i] = pm[i];
      profile.pn_ms[i] = pn[i];
    }
    return profile;
  } catch (const json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
}

sched::StageDag load_dag(const std::string& path) {
  json j = load_json_file(path);
  try {
    if (!j.contains("stages") || !j["stages"].is_array())
      throw parse_error(path + ": dag needs a stages array");
    std::vector<sched::Stage> stages;
    for (const auto& item : j["stages"]) {
      sched::Stage s;
      s.id = item.at("id").get<std::string>();
      auto proc = item.at("proc").get<std::string>();
      if (proc != "A" && proc != "B") throw parse_error(path + ": proc must be A or B");
      s.proc = proc == "A" ? sched::Proc::A : sched::Proc::B;
      s.duration_ms = item.at("duration_ms").get<double>();
      if (item.contains("deps")) s.deps = item["deps"].get<std::vector<std::string>>();
      stages.push_back(std::move(s));
    }
    return sched::StageDag(std::move(stages));
  } catch (const json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
}

json run_schedule(const ScheduleOptions& opt) {
  if (opt.dag_path.empty() && opt.profile_path.empty())
    throw argument_error("schedule needs --profile or --dag");
  sched::StageDag dag;
  if (!opt.dag_path.empty()) {
    dag = load_dag(opt.dag_path);
  } else {
    auto profile = load_profile(opt.profile_path);
    if (opt.mode == "naive")
      dag = sched::build_naive(profile, opt.transfer_ms);
    else if (opt.mode == "split")
      dag = sched::build_split(profile, opt.split_factor, opt.transfer_ms);
    else
      throw argument_error("unknown mode '" + opt.mode + "' (expected naive or split)");
  }

  auto timeline = sched::simulate(dag);
  json entries = json::array();
  for (const auto& e : timeline.entries)
    entries.push_back({{"id", e.id},
                       {"proc", sched::proc_name(e.proc)},
                       {"start_ms", e.start_ms},
                       {"end_ms", e.end_ms}});
  json out{{"makespan", timeline.makespan},
           {"busy_a", timeline.busy_a},
           {"busy_b", timeline.busy_b},
           {"idle_a", timeline.idle_a},
           {"idle_b", timeline.idle_b},
           {"critical_path", sched::critical_path(dag)},
           {"entries", entries}};

  if (!opt.out.empty()) {
    auto path = resolve_out(opt.out);
    if (opt.format == "svg")
      write_text_file(path, svg::gantt_svg(timeline));
    else if (opt.format == "json")
      write_text_file(path, out.dump(2) + "\n");
    else
      write_text_file(path, sched::timeline_csv(timeline));
    out["out"] = path;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-pipeline point cloud toolkit"};
  app.require_subcommand(1);

  SampleOptions sample_opt;
  auto* sample = app.add_subcommand("sample", "farthest point sampling over a cloud file");
  sample->add_option("inputs", sample_opt.inputs, "cloud files")->required();
  sample->add_option("--m", sample_opt.m, "points to sample")->required();
  sample->add_option("--w0", sample_opt.w0, "foreground bias weight (default 2)");
  sample->add_option("--start", sample_opt.start, "seed index");
  sample->add_option("--start-bias", sample_opt.start_bias,
                     "seed index of the biased half (with --split)");
  sample->add_flag("--split", sample_opt.split, "half plain, half foreground-biased");
  sample->add_option("--radius", sample_opt.radius, "also group neighbors in this radius");
  sample->add_option("--k", sample_opt.k, "group size for --radius (default 16)");
  sample->add_option("--jobs", sample_opt.jobs, "parallel workers across input files");

  PaintOptions paint_opt;
  auto* paint = app.add_subcommand("paint", "project points into a semantic mask");
  paint->add_option("input", paint_opt.input, "cloud file")->required();
  paint->add_option("--mask", paint_opt.mask_path, "mask JSON (width, height, labels)")
      ->required();
  paint->add_option("--camera", paint_opt.camera_path,
                    "camera JSON (fx, fy, cx, cy, rotation, translation)")
      ->required();
  paint->add_option("--out", paint_opt.out, "write the painted cloud here");
  paint->add_option("--format", paint_opt.format, "text or binary (default binary)")
      ->check(CLI::IsMember({"text", "binary"}));

  BackboneOptions backbone_opt;
  auto* backbone =
      app.add_subcommand("backbone", "run the two-pipeline set-abstraction backbone");
  backbone->add_option("input", backbone_opt.input, "painted cloud file")->required();
  backbone->add_option("--weights", backbone_opt.weights, "weight manifest JSON");
  backbone->add_option("--seed", backbone_opt.seed, "seed for generated weights");
  backbone->add_option("--out", backbone_opt.out, "write the fused feature tensor here");

  StatsOptions stats_opt;
  auto* stats = app.add_subcommand("stats", "parameter and madd counts for layer specs");
  auto* preset_opt =
      stats->add_option("--preset", stats_opt.preset, "fp-pointnet2 or fp-pointsplit")
          ->check(CLI::IsMember({"fp-pointnet2", "fp-pointsplit"}));
  stats->add_option("--spec", stats_opt.spec_path, "layer spec JSON file")
      ->excludes(preset_opt);

  QuantizeOptions quantize_opt;
  auto* quantize = app.add_subcommand("quantize", "int8 quantization parameters and error");
  quantize->add_option("input", quantize_opt.input, "tensor file to quantize");
  quantize->add_option("--granularity", quantize_opt.granularity,
                       "layer, group:N, channel or role");
  quantize->add_option("--layout", quantize_opt.layout, "sunrgbd or scannet");

  KlmapOptions klmap_opt;
  auto* klmap = app.add_subcommand("klmap", "pairwise channel divergence matrix");
  klmap->add_option("inputs", klmap_opt.inputs, "activation tensor files")->required();
  klmap->add_option("--bins", klmap_opt.bins, "histogram bins (default 128)");
  klmap->add_option("--epsilon", klmap_opt.epsilon, "smoothing mass (default 1e-10)");
  klmap->add_option("--blocks", klmap_opt.blocks, "comma block widths, e.g. 3,34,42");
  klmap->add_option("--out", klmap_opt.out, "write the matrix here");
  klmap->add_option("--format", klmap_opt.format, "csv or svg (default csv)")
      ->check(CLI::IsMember({"csv", "svg"}));

  ScheduleOptions schedule_opt;
  auto* schedule = app.add_subcommand("schedule", "simulate a two-processor pipeline");
  auto* profile_opt =
      schedule->add_option("--profile", schedule_opt.profile_path, "latency profile JSON");
  schedule->add_option("--dag", schedule_opt.dag_path, "explicit stage dag JSON")
      ->excludes(profile_opt);
  schedule->add_option("--mode", schedule_opt.mode, "naive or split (default naive)");
  schedule->add_option("--split-factor", schedule_opt.split_factor,
                       "per-stage cost factor for split mode (default 0.5)");
  schedule->add_option("--transfer", schedule_opt.transfer_ms,
                       "cross-processor transfer cost per dependency");
  schedule->add_option("--out", schedule_opt.out, "write the timeline here");
  schedule->add_option("--format", schedule_opt.format, "csv, json or svg (default csv)")
      ->check(CLI::IsMember({"csv", "json", "svg"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  auto started = std::chrono::steady_clock::now();
  try {
    json config, result;
    std::string command;
    if (sample->parsed()) {
      command = "sample";
      config = {{"inputs", sample_opt.inputs}, {"m", sample_opt.m},
                {"w0", sample_opt.w0},        {"start", sample_opt.start},
                {"start_bias", sample_opt.start_bias}, {"split", sample_opt.split},
                {"radius", sample_opt.radius}, {"k", sample_opt.k},
                {"jobs", sample_opt.jobs}};
      result = run_sample(sample_opt);
    } else if (paint->parsed()) {
      command = "paint";
      config = {{"input", paint_opt.input},
                {"mask", paint_opt.mask_path},
                {"camera", paint_opt.camera_path},
                {"out", paint_opt.out},
                {"format", paint_opt.format}};
      result = run_paint(paint_opt);
    } else if (backbone->parsed()) {
      command = "backbone";
      config = {{"input", backbone_opt.input},
                {"weights", backbone_opt.weights},
                {"seed", backbone_opt.seed},
                {"out", backbone_opt.out}};
      result = run_backbone_cmd(backbone_opt);
    } else if (stats->parsed()) {
      command = "stats";
      if (stats_opt.preset.empty() && stats_opt.spec_path.empty())
        throw argument_error("stats needs --preset or --spec");
      config = {{"preset", stats_opt.preset}, {"spec", stats_opt.spec_path}};
      result = run_stats(stats_opt);
    } else if (quantize->parsed()) {
      command = "quantize";
      config = {{"input", quantize_opt.input},
                {"granularity", quantize_opt.granularity},
                {"layout", quantize_opt.layout}};
      result = run_quantize(quantize_opt);
    } else if (klmap->parsed()) {
      command = "klmap";
      config = {{"inputs", klmap_opt.inputs},   {"bins", klmap_opt.bins},
                {"epsilon", klmap_opt.epsilon}, {"blocks", klmap_opt.blocks},
                {"out", klmap_opt.out},         {"format", klmap_opt.format}};
      result = run_klmap(klmap_opt);
    } else if (schedule->parsed()) {
      command = "schedule";
      config = {{"profile", schedule_opt.profile_path},
                {"dag", schedule_opt.dag_path},
                {"mode", schedule_opt.mode},
                {"split_factor", schedule_opt.split_factor},
                {"transfer", schedule_opt.transfer_ms},
                {"out", schedule_opt.out},
                {"format", schedule_opt.format}};
      result = run_schedule(schedule_opt);
    }
    double duration_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count();
    print_report(command, std::move(config), std::move(result), duration_ms);
    return 0;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
