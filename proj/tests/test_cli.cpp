#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "oracles.hpp"
#include "pointsplit/pointcloud.hpp"
#include "pointsplit/quant.hpp"

using json = nlohmann::json;
using namespace pointsplit;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;

  json report() const { return json::parse(out); }
};

RunResult run_cli(const std::string& args, const std::string& env = "") {
  std::string cmd = env + (env.empty() ? "" : " ") + POINTSPLIT_CLI_PATH + " " + args +
                    " 2>/dev/null";
  std::FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  int status = pclose(pipe);
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = std::move(out);
  return r;
}

std::filesystem::path work_dir() {
  auto dir = std::filesystem::temp_directory_path() / "pointsplit_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
  auto path = (work_dir() / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

std::string labeled_cloud_file(const std::string& name, std::size_t n,
                               std::uint64_t seed) {
  oracles::TestRng rng(seed);
  std::vector<pointcloud::Point3> pts;
  std::vector<std::uint16_t> classes;
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back({static_cast<float>(rng.uniform(-4, 4)),
                   static_cast<float>(rng.uniform(-4, 4)),
                   static_cast<float>(rng.uniform(-4, 4))});
    classes.push_back(rng.integer(4) == 0 ? 1 : 0);
  }
  pointcloud::PaintedPointCloud painted(pointcloud::PointCloud(std::move(pts)),
                                        std::move(classes), 2);
  auto path = (work_dir() / name).string();
  pointcloud::save_cloud_file(painted, path, pointcloud::CloudFormat::binary);
  return path;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("sample returns every index of a tiny cloud") {
  auto path = write_file("four.txt", "0 0 0\n1 0 0\n0 1 0\n0 0 1\n");
  auto r = run_cli("sample --m 4 --w0 1 " + path);
  REQUIRE(r.exit_code == 0);
  auto report = r.report();
  CHECK(report["command"] == "sample");
  CHECK(report["version"] == "0.1.0");
  auto indices = report["result"]["clouds"][0]["indices"].get<std::vector<std::size_t>>();
  CHECK(std::set<std::size_t>(indices.begin(), indices.end()) ==
        std::set<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("split sampling emits two equal halves") {
  auto path = labeled_cloud_file("split_fixture.pspc", 1200, 21);
  auto r = run_cli("sample --split --m 2048 --w0 2 " + path);
  REQUIRE(r.exit_code == 0);
  auto result = r.report()["result"]["clouds"][0];
  CHECK(result["normal"].size() == 1024);
  CHECK(result["bias"].size() == 1024);
}

TEST_CASE("sample fans multiple files across workers deterministically") {
  std::string files;
  for (int i = 0; i < 3; ++i)
    files += " " + labeled_cloud_file("fan_" + std::to_string(i) + ".pspc", 60, 30 + i);
  auto serial = run_cli("sample --m 8" + files);
  auto parallel = run_cli("sample --m 8 --jobs 3" + files);
  REQUIRE(serial.exit_code == 0);
  REQUIRE(parallel.exit_code == 0);
  CHECK(serial.report()["result"] == parallel.report()["result"]);
  CHECK(serial.report()["result"]["clouds"].size() == 3);
}

TEST_CASE("sampling errors map to the documented exit codes") {
  CHECK(run_cli("sample --m 4 " + (work_dir() / "missing.txt").string()).exit_code == 1);
  auto path = write_file("two.txt", "0 0 0\n1 1 1\n");
  CHECK(run_cli("sample --m 0 " + path).exit_code == 2);
  CHECK(run_cli("sample --m 5 " + path).exit_code == 2);
  CHECK(run_cli("sample " + path).exit_code == 2);  // --m is required
  CHECK(run_cli("nonsense").exit_code == 2);
}

TEST_CASE("paint assigns the projected pixel class") {
  auto cloud = write_file("one.txt", "0 0 2\n");
  auto mask = write_file("mask.json",
                         R"({"width":3,"height":3,"labels":[0,0,0,0,5,0,0,0,0]})");
  auto camera = write_file("camera.json", R"({"fx":1,"fy":1,"cx":1,"cy":1})");
  auto out = (work_dir() / "painted.pspc").string();
  auto r = run_cli("paint " + cloud + " --mask " + mask + " --camera " + camera +
                   " --out " + out);
  REQUIRE(r.exit_code == 0);
  auto result = r.report()["result"];
  CHECK(result["num_classes"] == 6);
  CHECK(result["foreground"] == 1);
  auto painted = pointcloud::load_cloud_file(out);
  REQUIRE(painted.size() == 1);
  CHECK(painted.classes()[0] == 5);

  auto bad_mask = write_file("bad_mask.json", "{\"width\": 3}");
  CHECK(run_cli("paint " + cloud + " --mask " + bad_mask + " --camera " + camera)
            .exit_code == 1);
}

TEST_CASE("stats reproduces the preset numbers and custom specs") {
  auto base = run_cli("stats --preset fp-pointnet2");
  REQUIRE(base.exit_code == 0);
  CHECK(base.report()["result"]["params"] == 398336);
  CHECK(base.report()["result"]["madds"] == 304349184);

  auto fused = run_cli("stats --preset fp-pointsplit");
  REQUIRE(fused.exit_code == 0);
  CHECK(fused.report()["result"]["params"] == 197888);
  CHECK(fused.report()["result"]["madds"] == 202113024);

  auto spec = write_file(
      "spec.json",
      R"([{"input_width":4,"widths":[2],"bias":true,"batchnorm":false,"points":1}])");
  auto custom = run_cli("stats --spec " + spec);
  REQUIRE(custom.exit_code == 0);
  CHECK(custom.report()["result"]["params"] == 10);

  CHECK(run_cli("stats").exit_code == 2);
  CHECK(run_cli("stats --preset no-such-preset").exit_code == 2);
}

TEST_CASE("quantize counts stored parameters per granularity") {
  auto layer = run_cli("quantize --granularity layer --layout sunrgbd");
  REQUIRE(layer.exit_code == 0);
  CHECK(layer.report()["result"]["param_count"] == 8);

  auto role = run_cli("quantize --granularity role");
  REQUIRE(role.exit_code == 0);
  CHECK(role.report()["result"]["param_count"] == 20);

  auto channel = run_cli("quantize --granularity channel --layout scannet");
  REQUIRE(channel.exit_code == 0);
  CHECK(channel.report()["result"]["param_count"] == 1424);

  CHECK(run_cli("quantize --granularity diagonal").exit_code == 2);
  CHECK(run_cli("quantize --layout kitti").exit_code == 2);
}

TEST_CASE("quantize reports the round-trip error of a tensor file") {
  oracles::TestRng rng(41);
  quant::Tensor t;
  t.shape = {64, 79};
  for (std::size_t i = 0; i < 64 * 79; ++i)
    t.values.push_back(static_cast<float>(rng.uniform(-2, 2)));
  auto path = (work_dir() / "proposal.pstn").string();
  quant::save_tensor_file(t, path);

  auto r = run_cli("quantize --granularity role --layout sunrgbd " + path);
  REQUIRE(r.exit_code == 0);
  auto result = r.report()["result"];
  CHECK(result["channels"] == 79);
  CHECK(result["groups"] == 3);
  CHECK(result["quant_error"]["max_abs"].get<double>() > 0.0);
  CHECK(result["quant_error"]["mse"].get<double>() < 1.0);

  auto again = run_cli("quantize --granularity role --layout sunrgbd " + path);
  CHECK(again.report()["result"] == result);  // reports are reproducible

  // 79 channels matches no scannet role layout.
  CHECK(run_cli("quantize --granularity role --layout scannet " + path).exit_code == 2);
}

TEST_CASE("klmap flags identical channels as zero divergence") {
  quant::Tensor t;
  t.shape = {128, 3};
  oracles::TestRng rng(42);
  for (std::size_t r = 0; r < 128; ++r) {
    float v = static_cast<float>(rng.uniform(-1, 1));
    t.values.insert(t.values.end(), {v, v, v});
  }
  auto path = (work_dir() / "identical.pstn").string();
  quant::save_tensor_file(t, path);

  auto csv_out = (work_dir() / "kl.csv").string();
  auto r = run_cli("klmap " + path + " --bins 32 --out " + csv_out);
  REQUIRE(r.exit_code == 0);
  CHECK(r.report()["result"]["max_divergence"].get<double>() == 0.0);
  CHECK(std::filesystem::exists(csv_out));

  auto svg_out = (work_dir() / "kl.svg").string();
  auto r2 = run_cli("klmap " + path + " --bins 32 --format svg --out " + svg_out);
  REQUIRE(r2.exit_code == 0);
  std::ifstream svg(svg_out);
  std::string first_line;
  std::getline(svg, first_line);
  CHECK(first_line.rfind("<svg", 0) == 0);
}

TEST_CASE("klmap reports block structure and rejects mismatched inputs") {
  oracles::TestRng rng(43);
  quant::Tensor t;
  t.shape = {600, 79};
  for (std::size_t r = 0; r < 600; ++r)
    for (std::size_t c = 0; c < 79; ++c) {
      double v = c < 3 ? rng.uniform(-0.02, 0.02)
                       : (c < 37 ? rng.uniform(-3, 3) : rng.uniform(0.5, 1.5));
      t.values.push_back(static_cast<float>(v));
    }
  auto path = (work_dir() / "threepop.pstn").string();
  quant::save_tensor_file(t, path);

  auto r = run_cli("klmap " + path + " --bins 64 --blocks 3,34,42");
  REQUIRE(r.exit_code == 0);
  auto blocks = r.report()["result"]["blocks"];
  CHECK(blocks["mean_within"].get<double>() < blocks["mean_cross"].get<double>());

  CHECK(run_cli("klmap " + path + " --blocks 3,34").exit_code == 2);

  quant::Tensor narrow;
  narrow.shape = {4, 2};
  narrow.values = {0, 1, 2, 3, 4, 5, 6, 7};
  auto narrow_path = (work_dir() / "narrow.pstn").string();
  quant::save_tensor_file(narrow, narrow_path);
  CHECK(run_cli("klmap " + path + " " + narrow_path).exit_code == 2);
}

TEST_CASE("schedule simulates the measured profile in both modes") {
  auto profile = write_file(
      "profile.json",
      R"({"seg":222,"pm":[199,52,25,20],"pn":[47,71,84,21],"head":0})");

  auto naive = run_cli("schedule --profile " + profile);
  REQUIRE(naive.exit_code == 0);
  CHECK(naive.report()["result"]["makespan"] == 741.0);
  CHECK(naive.report()["result"]["critical_path"] == 741.0);

  auto split = run_cli("schedule --profile " + profile + " --mode split");
  REQUIRE(split.exit_code == 0);
  CHECK(split.report()["result"]["makespan"].get<double>() < 741.0);
  CHECK(split.report()["result"]["idle_a"].get<double>() <
        naive.report()["result"]["idle_a"].get<double>());

  auto csv_path = (work_dir() / "timeline.csv").string();
  auto with_csv = run_cli("schedule --profile " + profile + " --out " + csv_path);
  REQUIRE(with_csv.exit_code == 0);
  std::ifstream csv(csv_path);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "stage,start,end,proc");

  CHECK(run_cli("schedule --profile " + profile + " --mode sideways").exit_code == 2);
  CHECK(run_cli("schedule").exit_code == 2);
}

TEST_CASE("cyclic dags exit with the configuration code") {
  auto dag = write_file("cycle.json", R"({"stages":[
    {"id":"a","proc":"A","duration_ms":1,"deps":["b"]},
    {"id":"b","proc":"B","duration_ms":1,"deps":["a"]}]})");
  CHECK(run_cli("schedule --dag " + dag).exit_code == 2);

  auto line = write_file("line.json", R"({"stages":[
    {"id":"a","proc":"A","duration_ms":2},
    {"id":"b","proc":"B","duration_ms":3,"deps":["a"]}]})");
  auto r = run_cli("schedule --dag " + line);
  REQUIRE(r.exit_code == 0);
  CHECK(r.report()["result"]["makespan"] == 5.0);
}

TEST_CASE("relative outputs land in the configured directory") {
  auto out_dir = work_dir() / "outputs";
  std::filesystem::remove_all(out_dir);
  auto profile = write_file(
      "profile_env.json",
      R"({"seg":1,"pm":[1,1,1,1],"pn":[1,1,1,1],"head":1})");
  auto r = run_cli("schedule --profile " + profile + " --out env_timeline.csv",
                   "POINTSPLIT_OUT_DIR=" + out_dir.string());
  REQUIRE(r.exit_code == 0);
  CHECK(std::filesystem::exists(out_dir / "env_timeline.csv"));
  CHECK(r.report()["result"]["out"] == (out_dir / "env_timeline.csv").string());
}

TEST_CASE("backbone reports the fused shape of the default configuration") {
  auto path = labeled_cloud_file("backbone_scene.pspc", 1100, 44);
  auto fused_out = (work_dir() / "fused.pstn").string();
  auto r = run_cli("backbone " + path + " --seed 3 --out " + fused_out);
  REQUIRE(r.exit_code == 0);
  auto result = r.report()["result"];
  CHECK(result["coords"] == 256);
  CHECK(result["feature_width"] == 256);
  CHECK(result["layers"].size() == 7);

  auto fused = quant::load_tensor_file(fused_out);
  CHECK(fused.shape == std::vector<std::size_t>{256, 256});

  auto tiny = write_file("tiny.txt", "0 0 0\n1 1 1\n");
  CHECK(run_cli("backbone " + tiny).exit_code == 2);  // needs 1024 points
}

}  // TEST_SUITE
