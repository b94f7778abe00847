#pragma once

#include <string>
#include <vector>

#include "pointsplit/sched.hpp"

namespace pointsplit::svg {

// Two-row Gantt chart (processor A above B) of a simulated timeline.
std::string gantt_svg(const sched::Timeline& timeline);

// Rectangular grid heatmap of a matrix (e.g. pairwise channel divergences),
// shaded light (minimum) to dark (maximum).
std::string heatmap_svg(const std::vector<std::vector<double>>& matrix);

}  // namespace pointsplit::svg
