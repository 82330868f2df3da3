#pragma once

#include <string>
#include <vector>

#include "cubegraph/graph.hpp"
#include "cubegraph/vectorize.hpp"

namespace cubegraph {

struct BarGroup {
  std::string label;
  std::vector<double> values;
  std::vector<double> errors;  // optional whiskers, same length as values or empty
};

// Vertical grouped bars on a [0, 1] axis, one colour per series.
std::string grouped_bar_chart(const std::vector<BarGroup>& groups, const std::vector<std::string>& series,
                              const std::string& title);

// Horizontal bars, drawn top to bottom in the given order.
std::string horizontal_bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                                 const std::string& title);

// Polylines in grey and the graph on top (edges as lines, nodes as dots).
std::string overlay_svg(int width, int height, const std::vector<Polyline>& lines, const SketchGraph& g);

std::string xml_escape(const std::string& s);

}  // namespace cubegraph
