#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cubegraph/geometry.hpp"
#include "cubegraph/vectorize.hpp"

namespace cubegraph {

using Edge = std::pair<int, int>;

// Undirected graph of stroke corners. Canonical form: no self-loops, no
// duplicate edges, edges stored as (min, max) in sorted order, nodes sorted
// by (x, y), no isolated nodes.
struct SketchGraph {
  std::vector<Point> nodes;
  std::vector<Edge> edges;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t edge_count() const { return edges.size(); }
  std::vector<std::vector<int>> adjacency() const;
  std::vector<int> degrees() const;
  void validate() const;

  friend bool operator==(const SketchGraph&, const SketchGraph&) = default;
};

struct MergeConfig {
  double delta = 10.0;  // node merge radius in pixels

  void validate() const;
};

// Polyline endpoints become candidate nodes (as a set of distinct points),
// candidates within delta are merged by single linkage, each cluster becomes
// its centroid, and each polyline becomes one edge. Clusters whose centroids
// end up within delta of each other are merged again until separated.
SketchGraph build_graph(const std::vector<Polyline>& lines, const MergeConfig& cfg);

// Drops self-loops, duplicate edges and isolated nodes; sorts nodes by (x, y).
SketchGraph canonicalize(const SketchGraph& g);

// Provenance stored alongside a graph on disk.
struct GraphMeta {
  std::string source;
  std::map<std::string, std::string> params;
};

void write_graph(const SketchGraph& g, const GraphMeta& meta, const std::filesystem::path& path);
std::string graph_to_json(const SketchGraph& g, const GraphMeta& meta);
SketchGraph read_graph(const std::filesystem::path& path, GraphMeta* meta = nullptr);

// Backtracking isomorphism; returns a mapping a-index -> b-index if one exists.
std::optional<std::vector<int>> find_isomorphism(const SketchGraph& a, const SketchGraph& b);

// Relabels nodes: node i of g becomes node perm[i] of the result (not canonicalized).
SketchGraph permute_nodes(const SketchGraph& g, const std::vector<int>& perm);

// The 3-cube Q3 with unit-grid coordinates, used as a reference topology.
SketchGraph cube_graph_q3();

}  // namespace cubegraph
