#pragma once

#include <iosfwd>
#include <set>
#include <vector>

#include "cubegraph/geometry.hpp"
#include "cubegraph/raster.hpp"

namespace cubegraph {

// Ordered stroke approximation in pixel coordinates. At least two points,
// consecutive points distinct. A closed stroke repeats its first point last.
struct Polyline {
  std::vector<Point> points;

  Point front() const { return points.front(); }
  Point back() const { return points.back(); }
  double length() const;
  bool closed() const { return points.size() > 2 && points.front() == points.back(); }
};

struct SimplifyConfig {
  double epsilon = 3.0;   // Douglas-Peucker tolerance in pixels
  double spur_px = 8.0;   // junction-to-tip branches shorter than this are pruned; 0 disables
  double snap_px = 12.0;  // max junction shift onto a nearby sharp vertex; 0 disables

  void validate() const;
};

// Splits a one-pixel-wide skeleton into maximal pixel chains between
// endpoints and junctions. Adjacent junction pixels form one junction whose
// terminal point is the cluster pixel nearest its centroid. Isolated pixels
// produce no polyline.
std::vector<Polyline> trace_polylines(const BinaryImage& skel);

// Removes short branches that run from a shared junction point to a free
// tip, then joins the two strokes meeting at any junction left with exactly
// two incident strokes. Repeats until stable.
std::vector<Polyline> prune_spurs(std::vector<Polyline> lines, double max_length);

// Recursive Douglas-Peucker with point-to-segment distance.
Polyline simplify(const Polyline& line, const SimplifyConfig& cfg);

// Moves every point shared by three or more stroke ends to the least-squares
// intersection of lines fitted to the straight stretch (6-24 px away) of each
// incident stroke, when at least two such fits exist and the shift is at most
// max_shift. Corrects the offset of skeleton junctions from drawn corners.
// The moved points are added to `refined` when given.
std::vector<Polyline> refine_junctions(std::vector<Polyline> lines, double max_shift,
                                       std::set<Point>* refined = nullptr);

// Thinning places the junction of strokes meeting at an acute angle some
// distance from the drawn corner, which then shows up as a sharp vertex close
// to the junction on one of the strokes. For every point shared by three or
// more stroke ends, the nearest such vertex (first segment no longer than
// max_shift, turn of at least 45 degrees) marks the corner. The shared
// endpoint moves to where that stroke's line crosses the line of the stroke
// leaving the junction on the corner's other side (or to the vertex itself
// when no such stroke exists).
// Points in `fixed` are left alone.
std::vector<Polyline> snap_junctions(std::vector<Polyline> lines, double max_shift,
                                     const std::set<Point>& fixed = {});

// "x y" per line, polylines separated by a blank line.
void write_polylines_text(std::ostream& out, const std::vector<Polyline>& lines);

}  // namespace cubegraph
