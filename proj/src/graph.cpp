#include "cubegraph/graph.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

#include <json.hpp>

#include "cubegraph/error.hpp"

namespace cubegraph {

std::vector<std::vector<int>> SketchGraph::adjacency() const {
  std::vector<std::vector<int>> adj(nodes.size());
  for (auto [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& l : adj) std::sort(l.begin(), l.end());
  return adj;
}

std::vector<int> SketchGraph::degrees() const {
  std::vector<int> deg(nodes.size(), 0);
  for (auto [a, b] : edges) {
    ++deg[static_cast<std::size_t>(a)];
    ++deg[static_cast<std::size_t>(b)];
  }
  return deg;
}

void SketchGraph::validate() const {
  std::set<Edge> seen;
  const int n = static_cast<int>(nodes.size());
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw Error("graph: edge index out of range");
    if (a == b) throw Error("graph: self-loop on node " + std::to_string(a));
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) throw Error("graph: duplicate edge");
  }
}

void MergeConfig::validate() const {
  if (!(delta >= 0.0)) throw ConfigError("graph.delta must be >= 0");
}

namespace {

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

}  // namespace

SketchGraph build_graph(const std::vector<Polyline>& lines, const MergeConfig& cfg) {
  cfg.validate();
  std::vector<Point> cand;
  for (const auto& l : lines) {
    cand.push_back(l.front());
    cand.push_back(l.back());
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  const std::size_t n = cand.size();

  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (distance(cand[i], cand[j]) <= cfg.delta) uf.unite(i, j);
    }
  }

  // Centroids from sorted members; re-merge clusters whose centroids collide.
  std::vector<Point> centroid(n);
  while (true) {
    std::vector<Point> sum(n);
    std::vector<std::size_t> size(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = uf.find(i);
      sum[r] = sum[r] + cand[i];
      ++size[r];
    }
    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < n; ++i) {
      if (size[i] > 0) {
        centroid[i] = (1.0 / static_cast<double>(size[i])) * sum[i];
        roots.push_back(i);
      }
    }
    bool merged = false;
    for (std::size_t a = 0; a < roots.size(); ++a) {
      for (std::size_t b = a + 1; b < roots.size(); ++b) {
        if (distance(centroid[roots[a]], centroid[roots[b]]) <= cfg.delta) {
          uf.unite(roots[a], roots[b]);
          merged = true;
        }
      }
    }
    if (!merged) break;
  }

  SketchGraph g;
  std::vector<int> node_of_root(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = uf.find(i);
    if (node_of_root[r] < 0) {
      node_of_root[r] = static_cast<int>(g.nodes.size());
      g.nodes.push_back(centroid[r]);
    }
  }
  auto node_of = [&](Point p) {
    const auto it = std::lower_bound(cand.begin(), cand.end(), p);
    return node_of_root[uf.find(static_cast<std::size_t>(it - cand.begin()))];
  };
  for (const auto& l : lines) g.edges.push_back({node_of(l.front()), node_of(l.back())});
  return canonicalize(g);
}

SketchGraph canonicalize(const SketchGraph& g) {
  std::set<Edge> edges;
  for (auto [a, b] : g.edges) {
    if (a != b) edges.insert({std::min(a, b), std::max(a, b)});
  }
  std::vector<int> deg(g.nodes.size(), 0);
  for (auto [a, b] : edges) {
    ++deg[static_cast<std::size_t>(a)];
    ++deg[static_cast<std::size_t>(b)];
  }
  std::vector<int> order;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (deg[i] > 0) order.push_back(static_cast<int>(i));
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return g.nodes[static_cast<std::size_t>(a)] < g.nodes[static_cast<std::size_t>(b)];
  });
  std::vector<int> remap(g.nodes.size(), -1);
  SketchGraph out;
  for (int old : order) {
    remap[static_cast<std::size_t>(old)] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(g.nodes[static_cast<std::size_t>(old)]);
  }
  for (auto [a, b] : edges) {
    const int x = remap[static_cast<std::size_t>(a)];
    const int y = remap[static_cast<std::size_t>(b)];
    out.edges.push_back({std::min(x, y), std::max(x, y)});
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

std::string graph_to_json(const SketchGraph& g, const GraphMeta& meta) {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::json::array();
  for (Point p : g.nodes) j["nodes"].push_back({p.x, p.y});
  j["edges"] = nlohmann::json::array();
  for (auto [a, b] : g.edges) j["edges"].push_back({a, b});
  nlohmann::ordered_json m;
  m["source"] = meta.source;
  m["params"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : meta.params) m["params"][k] = v;
  j["meta"] = m;
  return j.dump(2) + "\n";
}

void write_graph(const SketchGraph& g, const GraphMeta& meta, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << graph_to_json(g, meta);
}

SketchGraph read_graph(const std::filesystem::path& path, GraphMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": no such file");
  SketchGraph g;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& p : j.at("nodes")) g.nodes.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& e : j.at("edges")) g.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    if (meta && j.contains("meta")) {
      const auto& m = j["meta"];
      meta->source = m.value("source", "");
      if (m.contains("params")) {
        for (const auto& [k, v] : m["params"].items()) meta->params[k] = v.get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": malformed graph file (" + e.what() + ")");
  }
  try {
    g.validate();
  } catch (const Error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return g;
}

std::optional<std::vector<int>> find_isomorphism(const SketchGraph& a, const SketchGraph& b) {
  const std::size_t n = a.nodes.size();
  if (n != b.nodes.size() || a.edges.size() != b.edges.size()) return std::nullopt;
  const auto adj_a = a.adjacency();
  const auto adj_b = b.adjacency();
  std::vector<std::vector<char>> mb(n, std::vector<char>(n, 0));
  for (auto [x, y] : b.edges) {
    mb[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] = 1;
    mb[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = 1;
  }
  std::vector<int> da = a.degrees(), db = b.degrees();
  {
    auto sa = da, sb = db;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa != sb) return std::nullopt;
  }
  std::vector<int> map(n, -1);
  std::vector<char> used(n, 0);
  std::function<bool(std::size_t)> extend = [&](std::size_t i) -> bool {
    if (i == n) return true;
    for (std::size_t c = 0; c < n; ++c) {
      if (used[c] || da[i] != db[c]) continue;
      bool ok = true;
      for (int nb : adj_a[i]) {
        const auto j = static_cast<std::size_t>(nb);
        if (j < i && !mb[c][static_cast<std::size_t>(map[j])]) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      // Non-edges among already mapped nodes must stay non-edges.
      std::size_t mapped_nb = 0;
      for (int nb : adj_a[i]) mapped_nb += static_cast<std::size_t>(nb) < i ? 1 : 0;
      std::size_t image_nb = 0;
      for (std::size_t j = 0; j < i; ++j) image_nb += mb[c][static_cast<std::size_t>(map[j])] ? 1 : 0;
      if (mapped_nb != image_nb) continue;
      map[i] = static_cast<int>(c);
      used[c] = 1;
      if (extend(i + 1)) return true;
      used[c] = 0;
      map[i] = -1;
    }
    return false;
  };
  if (!extend(0)) return std::nullopt;
  return map;
}

SketchGraph permute_nodes(const SketchGraph& g, const std::vector<int>& perm) {
  SketchGraph out;
  out.nodes.resize(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) out.nodes[static_cast<std::size_t>(perm[i])] = g.nodes[i];
  for (auto [a, b] : g.edges) {
    out.edges.push_back({perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]});
  }
  return out;
}

SketchGraph cube_graph_q3() {
  SketchGraph g;
  // Vertex bits (b2 b1 b0); the two 4-cycles are nested squares on a grid.
  for (int v = 0; v < 8; ++v) {
    const double s = (v & 4) ? 1.0 : 3.0;
    const double x = (v & 1) ? 3.0 + s : 3.0 - s;
    const double y = (v & 2) ? 3.0 + s : 3.0 - s;
    g.nodes.push_back({x, y});
  }
  for (int v = 0; v < 8; ++v) {
    for (int bit = 1; bit < 8; bit <<= 1) {
      const int u = v ^ bit;
      if (v < u) g.edges.push_back({v, u});
    }
  }
  return canonicalize(g);
}

}  // namespace cubegraph
