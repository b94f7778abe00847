#include "pointsplit/sched.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

namespace pointsplit::sched {

namespace {

void check_duration(const std::string& id, double d) {
  if (!(d >= 0.0) || !std::isfinite(d))
    throw argument_error("stage '" + id + "' needs a finite nonnegative duration");
}

// Dependency indices per stage, with unresolved ids rejected.
std::vector<std::vector<std::size_t>> dep_indices(const StageDag& dag) {
  std::vector<std::vector<std::size_t>> deps(dag.size());
  for (std::size_t i = 0; i < dag.size(); ++i)
    for (const std::string& d : dag.stages()[i].deps) deps[i].push_back(dag.index_of(d));
  return deps;
}

[[noreturn]] void throw_cycle(const StageDag& dag, const std::vector<std::size_t>& stack,
                              std::size_t entry) {
  std::string ids;
  auto it = std::find(stack.begin(), stack.end(), entry);
  for (; it != stack.end(); ++it) {
    if (!ids.empty()) ids += " -> ";
    ids += dag.stages()[*it].id;
  }
  ids += " -> " + dag.stages()[entry].id;
  throw config_error("dependency cycle: " + ids);
}

// DFS cycle check; throws config_error naming the cycle.
void ensure_acyclic(const StageDag& dag, const std::vector<std::vector<std::size_t>>& deps) {
  enum : char { unseen, active, done };
  std::vector<char> state(dag.size(), unseen);
  std::vector<std::size_t> stack;
  // Iterative DFS with an explicit work list of (node, next-dep) frames.
  for (std::size_t root = 0; root < dag.size(); ++root) {
    if (state[root] != unseen) continue;
    std::vector<std::pair<std::size_t, std::size_t>> frames{{root, 0}};
    state[root] = active;
    stack.push_back(root);
    while (!frames.empty()) {
      auto& [node, next] = frames.back();
      if (next < deps[node].size()) {
        std::size_t child = deps[node][next++];
        if (state[child] == active) throw_cycle(dag, stack, child);
        if (state[child] == unseen) {
          state[child] = active;
          stack.push_back(child);
          frames.emplace_back(child, 0);
        }
      } else {
        state[node] = done;
        stack.pop_back();
        frames.pop_back();
      }
    }
  }
}

}  // namespace

const char* proc_name(Proc p) { return p == Proc::A ? "A" : "B"; }

StageDag::StageDag(std::vector<Stage> stages) : stages_(std::move(stages)) {
  std::set<std::string> ids;
  for (const Stage& s : stages_) {
    if (s.id.empty()) throw argument_error("stage id must be nonempty");
    check_duration(s.id, s.duration_ms);
    if (!ids.insert(s.id).second) throw argument_error("duplicate stage id '" + s.id + "'");
  }
  for (const Stage& s : stages_)
    for (const std::string& d : s.deps)
      if (!ids.count(d))
        throw argument_error("stage '" + s.id + "' depends on unknown stage '" + d + "'");
}

const Stage& StageDag::at(const std::string& id) const { return stages_[index_of(id)]; }

std::size_t StageDag::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < stages_.size(); ++i)
    if (stages_[i].id == id) return i;
  throw argument_error("unknown stage '" + id + "'");
}

void LatencyProfile::validate() const {
  auto check = [](const char* name, double v) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw argument_error(std::string(name) + " must be finite and nonnegative");
  };
  check("seg_ms", seg_ms);
  check("head_ms", head_ms);
  for (double v : pm_ms) check("pm_ms", v);
  for (double v : pn_ms) check("pn_ms", v);
}

namespace {

double cross_transfer(const std::vector<Stage>& stages, const Stage& s, double transfer_ms) {
  if (transfer_ms == 0.0) return 0.0;
  double extra = 0.0;
  for (const std::string& d : s.deps)
    for (const Stage& t : stages)
      if (t.id == d && t.proc != s.proc) extra += transfer_ms;
  return extra;
}

StageDag finish_dag(std::vector<Stage> stages, double transfer_ms) {
  if (!(transfer_ms >= 0.0) || !std::isfinite(transfer_ms))
    throw argument_error("transfer_ms must be finite and nonnegative");
  for (Stage& s : stages) s.duration_ms += cross_transfer(stages, s, transfer_ms);
  return StageDag(std::move(stages));
}

}  // namespace

StageDag build_naive(const LatencyProfile& profile, double transfer_ms) {
  profile.validate();
  std::vector<Stage> stages;
  stages.push_back({"seg", Proc::B, profile.seg_ms, {}});
  std::string prev = "seg";
  for (int layer = 1; layer <= 4; ++layer) {
    std::string pm = "pm_" + std::to_string(layer);
    std::string pn = "pn_" + std::to_string(layer);
    stages.push_back({pm, Proc::A, profile.pm_ms[layer - 1], {prev}});
    stages.push_back({pn, Proc::B, profile.pn_ms[layer - 1], {pm}});
    prev = pn;
  }
  stages.push_back({"head", Proc::B, profile.head_ms, {prev}});
  return finish_dag(std::move(stages), transfer_ms);
}

StageDag build_split(const LatencyProfile& profile, double split_factor, double transfer_ms) {
  profile.validate();
  if (!(split_factor > 0.0) || !(split_factor <= 1.0))
    throw argument_error("split_factor must be in (0, 1]");
  std::vector<Stage> stages;
  stages.push_back({"seg", Proc::B, profile.seg_ms, {}});
  const char* pipelines[2] = {"normal", "bias"};
  for (const char* p : pipelines) {
    for (int layer = 1; layer <= 4; ++layer) {
      std::string suffix = std::string(p) + "_" + std::to_string(layer);
      std::string pm = "pm_" + suffix;
      std::string pn = "pn_" + suffix;
      std::vector<std::string> pm_deps;
      std::vector<std::string> pn_deps{pm};
      if (layer == 1) {
        // The normal pipeline jump-starts; the bias pipeline and every first
        // network stage need the segmentation labels.
        if (std::string(p) == "bias") pm_deps.push_back("seg");
        pn_deps.push_back("seg");
      } else {
        pm_deps.push_back("pn_" + std::string(p) + "_" + std::to_string(layer - 1));
      }
      stages.push_back({pm, Proc::A, split_factor * profile.pm_ms[layer - 1], pm_deps});
      stages.push_back({pn, Proc::B, split_factor * profile.pn_ms[layer - 1], pn_deps});
    }
  }
  stages.push_back({"head", Proc::B, profile.head_ms, {"pn_normal_4", "pn_bias_4"}});
  return finish_dag(std::move(stages), transfer_ms);
}

Timeline simulate(const StageDag& dag) {
  auto deps = dep_indices(dag);
  ensure_acyclic(dag, deps);
  const std::size_t n = dag.size();

  std::vector<double> end(n, 0.0);
  std::vector<char> scheduled(n, 0);
  double free_time[2] = {0.0, 0.0};
  Timeline tl;

  // Repeatedly commit the globally earliest decision: among stages whose
  // dependencies are all scheduled, take the one with the smallest feasible
  // start, then earliest ready time, then lexicographically smallest id. This
  // realizes the per-processor earliest-ready policy deterministically.
  for (std::size_t done = 0; done < n; ++done) {
    std::size_t best = n;
    double best_start = std::numeric_limits<double>::infinity();
    double best_ready = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (scheduled[i]) continue;
      double ready = 0.0;
      bool ok = true;
      for (std::size_t d : deps[i]) {
        if (!scheduled[d]) {
          ok = false;
          break;
        }
        ready = std::max(ready, end[d]);
      }
      if (!ok) continue;
      int proc = dag.stages()[i].proc == Proc::A ? 0 : 1;
      double start = std::max(ready, free_time[proc]);
      bool better = start < best_start || (start == best_start && ready < best_ready) ||
                    (start == best_start && ready == best_ready && best < n &&
                     dag.stages()[i].id < dag.stages()[best].id);
      if (better) {
        best = i;
        best_start = start;
        best_ready = ready;
      }
    }
    const Stage& s = dag.stages()[best];
    int proc = s.proc == Proc::A ? 0 : 1;
    end[best] = best_start + s.duration_ms;
    free_time[proc] = end[best];
    scheduled[best] = 1;
    tl.entries.push_back({s.id, s.proc, best_start, end[best]});
    tl.makespan = std::max(tl.makespan, end[best]);
    (s.proc == Proc::A ? tl.busy_a : tl.busy_b) += s.duration_ms;
  }

  std::sort(tl.entries.begin(), tl.entries.end(), [](const auto& a, const auto& b) {
    return a.start_ms != b.start_ms ? a.start_ms < b.start_ms : a.id < b.id;
  });
  tl.idle_a = tl.makespan - tl.busy_a;
  tl.idle_b = tl.makespan - tl.busy_b;
  return tl;
}

double critical_path(const StageDag& dag) {
  auto deps = dep_indices(dag);
  ensure_acyclic(dag, deps);
  std::vector<double> longest(dag.size(), -1.0);
  // Settle stages whose dependencies are all settled; repeats until done,
  // which terminates because the dag was just checked acyclic.
  double best = 0.0;
  std::size_t remaining = dag.size();
  std::vector<char> doneflag(dag.size(), 0);
  while (remaining > 0) {
    for (std::size_t i = 0; i < dag.size(); ++i) {
      if (doneflag[i]) continue;
      double base = 0.0;
      bool ready = true;
      for (std::size_t d : deps[i]) {
        if (!doneflag[d]) {
          ready = false;
          break;
        }
        base = std::max(base, longest[d]);
      }
      if (!ready) continue;
      longest[i] = base + dag.stages()[i].duration_ms;
      best = std::max(best, longest[i]);
      doneflag[i] = 1;
      --remaining;
    }
  }
  return best;
}

CommEstimate estimate_comm(double t_total, double t2_total) {
  if (!(t_total >= 0.0) || !std::isfinite(t_total) || !std::isfinite(t2_total))
    throw argument_error("totals must be finite and nonnegative");
  if (t2_total < t_total)
    throw config_error("doubled-compute total is below the base total; measurement invalid");
  CommEstimate e;
  e.t_total = t_total;
  e.t2_total = t2_total;
  e.t_comp = t2_total - t_total;
  e.t_comm = t_total - e.t_comp;
  if (e.t_comm < 0.0)
    throw config_error("computation exceeds the total; measurement invalid");
  return e;
}

CommEstimate estimate_comm_measured(double t_total, double t_comp) {
  if (!(t_total >= 0.0) || !(t_comp >= 0.0) || !std::isfinite(t_total) ||
      !std::isfinite(t_comp))
    throw argument_error("measurements must be finite and nonnegative");
  if (t_comp > t_total)
    throw config_error("computation exceeds the total; measurement invalid");
  CommEstimate e;
  e.t_total = t_total;
  e.t_comp = t_comp;
  e.t_comm = t_total - t_comp;
  e.t2_total = t_total + t_comp;
  return e;
}

std::string timeline_csv(const Timeline& timeline) {
  std::string out = "stage,start,end,proc\n";
  char buf[160];
  for (const TimelineEntry& e : timeline.entries) {
    std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g,%s\n", e.id.c_str(), e.start_ms, e.end_ms,
                  proc_name(e.proc));
    out += buf;
  }
  return out;
}

}  // namespace pointsplit::sched
