#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "pointsplit/common.hpp"

namespace pointsplit::sched {

// Processor A handles point manipulation, processor B neural-net evaluation.
enum class Proc { A, B };

const char* proc_name(Proc p);  // "A" / "B"

struct Stage {
  std::string id;
  Proc proc = Proc::A;
  double duration_ms = 0.0;
  std::vector<std::string> deps;

  friend bool operator==(const Stage&, const Stage&) = default;
};

// Stage collection with unique ids and resolvable dependencies. Cycles are
// legal to construct and rejected by simulate()/critical_path(), which report
// the offending ids.
class StageDag {
 public:
  StageDag() = default;
  explicit StageDag(std::vector<Stage> stages);

  std::size_t size() const { return stages_.size(); }
  const std::vector<Stage>& stages() const { return stages_; }
  const Stage& at(const std::string& id) const;
  std::size_t index_of(const std::string& id) const;

  friend bool operator==(const StageDag&, const StageDag&) = default;

 private:
  std::vector<Stage> stages_;
};

struct TimelineEntry {
  std::string id;
  Proc proc = Proc::A;
  double start_ms = 0.0;
  double end_ms = 0.0;
};

struct Timeline {
  std::vector<TimelineEntry> entries;  // ordered by (start, id)
  double busy_a = 0.0;
  double busy_b = 0.0;
  double idle_a = 0.0;
  double idle_b = 0.0;
  double makespan = 0.0;

  double busy(Proc p) const { return p == Proc::A ? busy_a : busy_b; }
  double idle(Proc p) const { return p == Proc::A ? idle_a : idle_b; }
};

// Measured per-stage latencies: 2D segmentation, then per set-abstraction
// layer the point-manipulation (processor A) and network (processor B) parts,
// then the detection head.
struct LatencyProfile {
  double seg_ms = 0.0;
  std::array<double, 4> pm_ms{};
  std::array<double, 4> pn_ms{};
  double head_ms = 0.0;

  void validate() const;  // argument_error on negative or non-finite entries
};

// Single sequential chain: seg -> pm_1 -> pn_1 -> ... -> pm_4 -> pn_4 -> head.
// transfer_ms is added to a stage's duration once per dependency that runs on
// the other processor.
StageDag build_naive(const LatencyProfile& profile, double transfer_ms = 0.0);

// Two half pipelines (normal and bias) whose pm/pn stages cost
// split_factor times the full-layer durations. The normal pipeline's first
// point-manipulation stage starts immediately (no segmentation dependency);
// everything else waits as the data flow dictates, and the head needs both
// pipelines' last network stages.
StageDag build_split(const LatencyProfile& profile, double split_factor = 0.5,
                     double transfer_ms = 0.0);

// Deterministic event-driven list scheduling: one stage per processor at a
// time; a free processor runs the stage that became ready earliest, ties
// broken lexicographically by id.
Timeline simulate(const StageDag& dag);

// Longest duration-weighted dependency chain; a lower bound on any makespan.
double critical_path(const StageDag& dag);

// Communication/computation decomposition from two end-to-end measurements of
// the same workload, the second with doubled computation per stage.
struct CommEstimate {
  double t_total = 0.0;
  double t2_total = 0.0;
  double t_comp = 0.0;
  double t_comm = 0.0;
};

// t_comp = t2_total - t_total, t_comm = t_total - t_comp; both components must
// come out nonnegative or the measurement pair is invalid.
CommEstimate estimate_comm(double t_total, double t2_total);
// For a directly measured compute component (no doubled run available).
CommEstimate estimate_comm_measured(double t_total, double t_comp);

std::string timeline_csv(const Timeline& timeline);  // stage,start,end,proc

}  // namespace pointsplit::sched
