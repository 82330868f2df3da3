#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cubegraph/graph.hpp"

namespace cubegraph {

inline constexpr int kOrbitCount = 15;
inline constexpr int kCoordDims = 2;
inline constexpr int kAngleDims = 3;
inline constexpr int kNodeFeatureDim = kCoordDims + kOrbitCount + kAngleDims;  // 20

// Column layout of an assembled feature row.
inline constexpr int kCoordOffset = 0;
inline constexpr int kOrbitOffset = kCoordDims;
inline constexpr int kAngleOffset = kCoordDims + kOrbitCount;

using OrbitCounts = std::array<std::int64_t, kOrbitCount>;

// Per-node automorphism-orbit counts over connected induced subgraphs on 2-4
// nodes (orbits 0-14, standard numbering).
std::vector<OrbitCounts> gdv(const SketchGraph& g);

// Up to three inner angles at `node`, each in [0, pi], sorted descending.
std::array<double, 3> inner_angles(const SketchGraph& g, int node);

struct FeatureOptions {
  bool log_gdv = true;  // log(1 + count); false keeps raw counts
};

// Row-major n x 20 matrix: [x, y, orbit 0..14, angle 0..2].
struct NodeFeatureMatrix {
  std::size_t rows = 0;
  std::vector<double> values;
  std::vector<OrbitCounts> raw_gdv;

  double at(std::size_t r, std::size_t c) const { return values[r * kNodeFeatureDim + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * kNodeFeatureDim + c]; }
};

NodeFeatureMatrix assemble_features(const SketchGraph& g, const FeatureOptions& opt = {});

void write_features_csv(std::ostream& out, const NodeFeatureMatrix& f);

}  // namespace cubegraph
