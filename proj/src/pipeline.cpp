#include "cubegraph/pipeline.hpp"

#include <set>

namespace cubegraph {

void PipelineConfig::validate() const {
  raster.validate();
  simplify.validate();
  merge.validate();
}

PipelineResult vectorize_image(const RasterImage& image, const PipelineConfig& cfg) {
  cfg.validate();
  PipelineResult r;
  r.binary = denoise(adaptive_threshold(image, cfg.raster), cfg.raster);
  r.skeleton = skeletonize(r.binary);
  std::vector<Polyline> traced = prune_spurs(trace_polylines(r.skeleton), cfg.simplify.spur_px);
  // Junctions with a reliable line fit are final; snapping only handles the rest.
  std::set<Point> refined;
  traced = refine_junctions(std::move(traced), cfg.simplify.snap_px, &refined);
  r.lines.reserve(traced.size());
  for (const auto& line : traced) r.lines.push_back(simplify(line, cfg.simplify));
  r.lines = snap_junctions(std::move(r.lines), cfg.simplify.snap_px, refined);
  r.graph = build_graph(r.lines, cfg.merge);
  return r;
}

}  // namespace cubegraph
