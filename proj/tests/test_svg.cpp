#include <doctest.h>

#include <string>
#include <vector>

#include "pointsplit/svg.hpp"

using namespace pointsplit;

TEST_SUITE("svg") {

TEST_CASE("gantt charts hold one labeled rect per stage") {
  sched::StageDag dag({{"seg", sched::Proc::B, 4, {}},
                       {"pm<1>", sched::Proc::A, 2, {"seg"}}});
  auto tl = sched::simulate(dag);
  auto svg = svg::gantt_svg(tl);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("seg") != std::string::npos);
  CHECK(svg.find("pm&lt;1&gt;") != std::string::npos);  // id is xml-escaped
  CHECK(svg.find("pm<1>") == std::string::npos);

  std::size_t rects = 0;
  for (std::size_t pos = svg.find("<rect"); pos != std::string::npos;
       pos = svg.find("<rect", pos + 1))
    ++rects;
  CHECK(rects >= 2);
}

TEST_CASE("heatmaps need a square matrix") {
  std::vector<std::vector<double>> m{{0.0, 1.0}, {0.5, 0.0}};
  auto svg = svg::heatmap_svg(m);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);

  std::vector<std::vector<double>> ragged{{0.0, 1.0}, {0.5}};
  CHECK_THROWS_AS(svg::heatmap_svg(ragged), argument_error);
  CHECK_THROWS_AS(svg::heatmap_svg({}), argument_error);
}

}  // TEST_SUITE
