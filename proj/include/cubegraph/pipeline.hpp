#pragma once

#include <vector>

#include "cubegraph/features.hpp"
#include "cubegraph/graph.hpp"
#include "cubegraph/raster.hpp"
#include "cubegraph/vectorize.hpp"

namespace cubegraph {

struct PipelineConfig {
  RasterConfig raster;
  SimplifyConfig simplify;
  MergeConfig merge;
  FeatureOptions features;

  void validate() const;
};

struct PipelineResult {
  BinaryImage binary;    // after thresholding and denoising
  BinaryImage skeleton;
  std::vector<Polyline> lines;  // pruned and simplified
  SketchGraph graph;
};

// Threshold, denoise, thin, trace, prune spurs, refine junctions, simplify,
// snap junctions, merge endpoints.
PipelineResult vectorize_image(const RasterImage& image, const PipelineConfig& cfg);

}  // namespace cubegraph
