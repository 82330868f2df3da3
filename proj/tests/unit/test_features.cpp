#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "cubegraph/error.hpp"
#include "cubegraph/features.hpp"
#include "cubegraph/random.hpp"
#include "oracles.hpp"

using namespace cubegraph;

namespace {

SketchGraph make_graph(std::vector<Point> nodes, std::vector<Edge> edges) {
  SketchGraph g;
  g.nodes = std::move(nodes);
  g.edges = std::move(edges);
  return g;
}

OrbitCounts orbits(std::initializer_list<std::pair<int, std::int64_t>> entries) {
  OrbitCounts c{};
  for (auto [k, v] : entries) c[static_cast<std::size_t>(k)] = v;
  return c;
}

SketchGraph triangle() { return make_graph({{0, 0}, {4, 0}, {2, 3}}, {{0, 1}, {0, 2}, {1, 2}}); }
SketchGraph path3() { return make_graph({{0, 0}, {1, 0}, {2, 0}}, {{0, 1}, {1, 2}}); }
SketchGraph claw() { return make_graph({{0, 0}, {1, 0}, {-1, 0}, {0, 1}}, {{0, 1}, {0, 2}, {0, 3}}); }

int count_cliques(const SketchGraph& g, int k) {
  const int n = static_cast<int>(g.node_count());
  std::vector<std::vector<bool>> adj(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n)));
  for (auto [a, b] : g.edges) adj[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = adj[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = true;
  auto e = [&](int a, int b) { return static_cast<bool>(adj[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]); };
  int count = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        if (!(e(a, b) && e(a, c) && e(b, c))) continue;
        if (k == 3) {
          ++count;
          continue;
        }
        for (int d = c + 1; d < n; ++d) count += (e(a, d) && e(b, d) && e(c, d)) ? 1 : 0;
      }
    }
  }
  return count;
}

}  // namespace

TEST(Gdv, TriangleFixture) {
  const auto got = gdv(triangle());
  EXPECT_EQ(got, oracle::brute_force_gdv(triangle()));
  for (const auto& c : got) EXPECT_EQ(c, orbits({{0, 2}, {3, 1}}));
}

TEST(Gdv, PathFixture) {
  const auto got = gdv(path3());
  EXPECT_EQ(got, oracle::brute_force_gdv(path3()));
  EXPECT_EQ(got[0], orbits({{0, 1}, {1, 1}}));
  EXPECT_EQ(got[1], orbits({{0, 2}, {2, 1}}));
  EXPECT_EQ(got[2], orbits({{0, 1}, {1, 1}}));
}

TEST(Gdv, ClawFixture) {
  const auto got = gdv(claw());
  EXPECT_EQ(got, oracle::brute_force_gdv(claw()));
  EXPECT_EQ(got[0], orbits({{0, 3}, {2, 3}, {7, 1}}));
  for (int leaf = 1; leaf <= 3; ++leaf) EXPECT_EQ(got[static_cast<std::size_t>(leaf)], orbits({{0, 1}, {1, 2}, {6, 1}}));
}

TEST(Gdv, CubeFixture) {
  const SketchGraph q = cube_graph_q3();
  const auto got = gdv(q);
  EXPECT_EQ(got, oracle::brute_force_gdv(q));
  // Three neighbours, six induced 2-paths outwards, three induced 4-cycles,
  // a leaf of three claws and the centre of one, no triangles.
  const OrbitCounts expected = orbits({{0, 3}, {1, 6}, {2, 3}, {4, 6}, {5, 6}, {6, 3}, {7, 1}, {8, 3}});
  for (const auto& c : got) EXPECT_EQ(c, expected);
}

TEST(Gdv, K4AndDiamondFixtures) {
  const SketchGraph k4 = make_graph({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  EXPECT_EQ(gdv(k4), oracle::brute_force_gdv(k4));
  EXPECT_EQ(gdv(k4)[0][14], 1);
  const SketchGraph diamond = make_graph({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}});
  EXPECT_EQ(gdv(diamond), oracle::brute_force_gdv(diamond));
  const SketchGraph paw = make_graph({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {{0, 1}, {0, 2}, {1, 2}, {2, 3}});
  EXPECT_EQ(gdv(paw), oracle::brute_force_gdv(paw));
  EXPECT_EQ(gdv(paw)[3][9], 1);
  EXPECT_EQ(gdv(paw)[2][11], 1);
}

TEST(Gdv, EmptyGraph) { EXPECT_TRUE(gdv(SketchGraph{}).empty()); }

TEST(Gdv, MatchesOracleOnRandomGraphs) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(8));
    const SketchGraph g = oracle::random_connected_graph(rng, n, rng.uniform(0.2, 0.6));
    ASSERT_EQ(gdv(g), oracle::brute_force_gdv(g)) << "trial " << trial;
  }
}

TEST(Gdv, StructuralIdentities) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const SketchGraph g = oracle::random_connected_graph(rng, 2 + static_cast<int>(rng.below(10)), rng.uniform(0.1, 0.7));
    const auto c = gdv(g);
    const auto deg = g.degrees();
    std::int64_t o3 = 0, o14 = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_EQ(c[i][0], deg[i]);
      o3 += c[i][3];
      o14 += c[i][14];
    }
    EXPECT_EQ(o3, 3 * count_cliques(g, 3));
    EXPECT_EQ(o14, 4 * count_cliques(g, 4));
  }
}

TEST(Gdv, BipartiteGraphsAreTriangleFree) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    // Random bipartite graph between even and odd nodes.
    SketchGraph g;
    const int n = 4 + static_cast<int>(rng.below(8));
    for (int i = 0; i < n; ++i) g.nodes.push_back({static_cast<double>(i), 0});
    for (int a = 0; a < n; a += 2) {
      for (int b = 1; b < n; b += 2) {
        if (rng.bernoulli(0.5)) g.edges.push_back({std::min(a, b), std::max(a, b)});
      }
    }
    for (const auto& c : gdv(g)) {
      for (int k : {3, 9, 10, 11, 12, 13, 14}) EXPECT_EQ(c[static_cast<std::size_t>(k)], 0);
    }
  }
}

TEST(Gdv, InvariantUnderRelabelling) {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const SketchGraph g = oracle::random_connected_graph(rng, 3 + static_cast<int>(rng.below(7)), 0.4);
    std::vector<int> perm(g.node_count());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<int>(perm));
    const auto a = gdv(g);
    const auto b = gdv(permute_nodes(g, perm));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[static_cast<std::size_t>(perm[i])]);
  }
}

TEST(InnerAngles, LeafIsZero) {
  EXPECT_EQ(inner_angles(path3(), 0), (std::array<double, 3>{0, 0, 0}));
}

TEST(InnerAngles, RightAngle) {
  const SketchGraph g = make_graph({{0, 0}, {1, 0}, {0, 1}}, {{0, 1}, {0, 2}});
  const auto a = inner_angles(g, 0);
  EXPECT_NEAR(a[0], std::numbers::pi / 2, 1e-12);
  EXPECT_EQ(a[1], 0.0);
  EXPECT_EQ(a[2], 0.0);
}

TEST(InnerAngles, ThreeWayGaps) {
  const double t = 210.0 * std::numbers::pi / 180.0;
  const SketchGraph g = make_graph({{0, 0}, {1, 0}, {0, 1}, {std::cos(t), std::sin(t)}}, {{0, 1}, {0, 2}, {0, 3}});
  const auto a = inner_angles(g, 0);
  EXPECT_NEAR(a[0], 150.0 * std::numbers::pi / 180.0, 1e-12);
  EXPECT_NEAR(a[1], 120.0 * std::numbers::pi / 180.0, 1e-12);
  EXPECT_NEAR(a[2], 90.0 * std::numbers::pi / 180.0, 1e-12);
}

TEST(InnerAngles, HighDegreeTakesLargestGaps) {
  // Five spokes at 0, 30, 60, 180, 270 degrees: gaps 30, 30, 120, 90, 90.
  SketchGraph g;
  g.nodes.push_back({0, 0});
  for (double deg : {0.0, 30.0, 60.0, 180.0, 270.0}) {
    const double r = deg * std::numbers::pi / 180.0;
    g.nodes.push_back({std::cos(r), std::sin(r)});
    g.edges.push_back({0, static_cast<int>(g.nodes.size()) - 1});
  }
  const auto a = inner_angles(g, 0);
  EXPECT_NEAR(a[0], 2 * std::numbers::pi / 3, 1e-12);
  EXPECT_NEAR(a[1], std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(a[2], std::numbers::pi / 2, 1e-12);
}

TEST(InnerAngles, RangeAndOrderOnRandomGraphs) {
  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    SketchGraph g = oracle::random_connected_graph(rng, 3 + static_cast<int>(rng.below(7)), 0.5);
    for (auto& p : g.nodes) p = {rng.uniform(0, 100), rng.uniform(0, 100)};
    for (int v = 0; v < static_cast<int>(g.node_count()); ++v) {
      const auto a = inner_angles(g, v);
      for (double x : a) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, std::numbers::pi);
      }
      EXPECT_GE(a[0], a[1]);
      EXPECT_GE(a[1], a[2]);
    }
  }
}

TEST(InnerAngles, OutOfRangeNode) { EXPECT_THROW(inner_angles(path3(), 7), Error); }

TEST(Assemble, SingleEdge) {
  const SketchGraph g = make_graph({{0, 0}, {10, 0}}, {{0, 1}});
  const auto f = assemble_features(g);
  ASSERT_EQ(f.rows, 2u);
  EXPECT_EQ(f.at(0, 0), 0.0);
  EXPECT_EQ(f.at(0, 1), 0.5);
  EXPECT_EQ(f.at(1, 0), 1.0);
  EXPECT_EQ(f.at(1, 1), 0.5);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_DOUBLE_EQ(f.at(r, kOrbitOffset), std::log(2.0));
    for (int k = 1; k < kOrbitCount; ++k) EXPECT_EQ(f.at(r, static_cast<std::size_t>(kOrbitOffset + k)), 0.0);
    for (int k = 0; k < kAngleDims; ++k) EXPECT_EQ(f.at(r, static_cast<std::size_t>(kAngleOffset + k)), 0.0);
  }
}

TEST(Assemble, RawCountsOption) {
  FeatureOptions opt;
  opt.log_gdv = false;
  const auto f = assemble_features(cube_graph_q3(), opt);
  EXPECT_EQ(f.at(0, kOrbitOffset + 4), 6.0);
}

TEST(Assemble, CubeSpotCheck) {
  const SketchGraph q = cube_graph_q3();
  const auto f = assemble_features(q);
  const auto c = oracle::brute_force_gdv(q);
  double max_count = 0;
  for (const auto& row : c) {
    for (auto v : row) max_count = std::max(max_count, static_cast<double>(v));
  }
  double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
  for (const auto& p : q.nodes) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  for (std::size_t r = 0; r < f.rows; ++r) {
    for (int k = 0; k < kOrbitCount; ++k) {
      const double v = f.at(r, static_cast<std::size_t>(kOrbitOffset + k));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, std::log1p(max_count));
    }
  }
  // Node 3 assembled by hand from the two oracles.
  const std::size_t v = 3;
  EXPECT_DOUBLE_EQ(f.at(v, 0), (q.nodes[v].x - xmin) / (xmax - xmin));
  EXPECT_DOUBLE_EQ(f.at(v, 1), (q.nodes[v].y - ymin) / (ymax - ymin));
  for (int k = 0; k < kOrbitCount; ++k) {
    EXPECT_DOUBLE_EQ(f.at(v, static_cast<std::size_t>(kOrbitOffset + k)),
                     std::log1p(static_cast<double>(c[v][static_cast<std::size_t>(k)])));
  }
  const auto ang = inner_angles(q, static_cast<int>(v));
  for (int k = 0; k < kAngleDims; ++k) {
    EXPECT_DOUBLE_EQ(f.at(v, static_cast<std::size_t>(kAngleOffset + k)), ang[static_cast<std::size_t>(k)] / std::numbers::pi);
  }
}

TEST(Assemble, EmptyGraph) { EXPECT_EQ(assemble_features(SketchGraph{}).rows, 0u); }

TEST(Assemble, CsvHeader) {
  std::ostringstream out;
  write_features_csv(out, assemble_features(path3()));
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "node,x,y,orbit0,orbit1,orbit2,orbit3,orbit4,orbit5,orbit6,orbit7,orbit8,orbit9,orbit10,orbit11,orbit12,"
            "orbit13,orbit14,angle0,angle1,angle2");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}
