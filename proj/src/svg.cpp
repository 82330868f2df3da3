#include "cubegraph/svg.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>

namespace cubegraph {

namespace {

constexpr std::array<const char*, 6> kPalette = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string grouped_bar_chart(const std::vector<BarGroup>& groups, const std::vector<std::string>& series,
                              const std::string& title) {
  const double bar = 14.0, gap = 24.0, left = 50.0, top = 40.0, plot_h = 220.0;
  const double group_w = bar * static_cast<double>(series.size()) + gap;
  const double width = left + group_w * static_cast<double>(groups.size()) + 140.0;
  const double height = top + plot_h + 60.0;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<text x=\"" << num(left) << "\" y=\"20\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double y = top + plot_h * (1.0 - tick / 4.0);
    out << "<line x1=\"" << num(left) << "\" y1=\"" << num(y) << "\" x2=\"" << num(width - 140.0) << "\" y2=\""
        << num(y) << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << num(tick / 4.0)
        << "</text>\n";
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double x0 = left + gap / 2 + group_w * static_cast<double>(g);
    for (std::size_t s = 0; s < groups[g].values.size() && s < series.size(); ++s) {
      const double v = std::clamp(groups[g].values[s], 0.0, 1.0);
      const double x = x0 + bar * static_cast<double>(s);
      out << "<rect x=\"" << num(x) << "\" y=\"" << num(top + plot_h * (1 - v)) << "\" width=\"" << num(bar - 2)
          << "\" height=\"" << num(plot_h * v) << "\" fill=\"" << kPalette[s % kPalette.size()] << "\"/>\n";
      if (s < groups[g].errors.size()) {
        const double lo = std::clamp(groups[g].values[s] - groups[g].errors[s], 0.0, 1.0);
        const double hi = std::clamp(groups[g].values[s] + groups[g].errors[s], 0.0, 1.0);
        const double cx = x + (bar - 2) / 2;
        out << "<line x1=\"" << num(cx) << "\" y1=\"" << num(top + plot_h * (1 - lo)) << "\" x2=\"" << num(cx)
            << "\" y2=\"" << num(top + plot_h * (1 - hi)) << "\" stroke=\"#333\"/>\n";
      }
    }
    out << "<text x=\"" << num(x0 + (group_w - gap) / 2) << "\" y=\"" << num(top + plot_h + 16)
        << "\" text-anchor=\"middle\">" << xml_escape(groups[g].label) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = top + 16.0 * static_cast<double>(s);
    out << "<rect x=\"" << num(width - 130) << "\" y=\"" << num(y) << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[s % kPalette.size()] << "\"/>\n";
    out << "<text x=\"" << num(width - 115) << "\" y=\"" << num(y + 9) << "\">" << xml_escape(series[s])
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string horizontal_bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                                 const std::string& title) {
  const double row = 20.0, left = 130.0, top = 36.0, plot_w = 300.0;
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  if (vmax <= 0.0) vmax = 1.0;
  const double height = top + row * static_cast<double>(labels.size()) + 20.0;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(left + plot_w + 80) << "\" height=\""
      << num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<text x=\"10\" y=\"20\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  for (std::size_t i = 0; i < labels.size() && i < values.size(); ++i) {
    const double y = top + row * static_cast<double>(i);
    const double w = plot_w * std::max(0.0, values[i]) / vmax;
    out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + 13) << "\" text-anchor=\"end\">"
        << xml_escape(labels[i]) << "</text>\n";
    out << "<rect x=\"" << num(left) << "\" y=\"" << num(y + 3) << "\" width=\"" << num(w)
        << "\" height=\"14\" fill=\"" << kPalette[0] << "\"/>\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", values[i]);
    out << "<text x=\"" << num(left + w + 4) << "\" y=\"" << num(y + 13) << "\">" << buf << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string overlay_svg(int width, int height, const std::vector<Polyline>& lines, const SketchGraph& g) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& line : lines) {
    out << "<polyline fill=\"none\" stroke=\"#bbb\" stroke-width=\"3\" points=\"";
    for (std::size_t i = 0; i < line.points.size(); ++i) {
      out << (i ? " " : "") << num(line.points[i].x) << ',' << num(line.points[i].y);
    }
    out << "\"/>\n";
  }
  for (const auto& [a, b] : g.edges) {
    const Point& p = g.nodes[static_cast<std::size_t>(a)];
    const Point& q = g.nodes[static_cast<std::size_t>(b)];
    out << "<line x1=\"" << num(p.x) << "\" y1=\"" << num(p.y) << "\" x2=\"" << num(q.x) << "\" y2=\"" << num(q.y)
        << "\" stroke=\"#e15759\" stroke-width=\"1.5\"/>\n";
  }
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    out << "<circle cx=\"" << num(g.nodes[i].x) << "\" cy=\"" << num(g.nodes[i].y)
        << "\" r=\"3\" fill=\"#4e79a7\"><title>" << i << "</title></circle>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace cubegraph
