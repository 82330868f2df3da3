#include "cubegraph/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "cubegraph/error.hpp"

namespace cubegraph {

namespace {

// Dense adjacency plus sorted neighbour lists and per-edge triangle counts.
class OrbitCounter {
 public:
  explicit OrbitCounter(const SketchGraph& g)
      : n_(static_cast<int>(g.nodes.size())), adj_(g.adjacency()), matrix_(static_cast<std::size_t>(n_) * n_, 0) {
    for (auto [a, b] : g.edges) {
      matrix_[static_cast<std::size_t>(a) * n_ + b] = 1;
      matrix_[static_cast<std::size_t>(b) * n_ + a] = 1;
    }
    deg_.resize(static_cast<std::size_t>(n_));
    for (int v = 0; v < n_; ++v) deg_[static_cast<std::size_t>(v)] = static_cast<std::int64_t>(adj_[static_cast<std::size_t>(v)].size());
  }

  std::vector<OrbitCounts> count() const {
    std::vector<OrbitCounts> orbit(static_cast<std::size_t>(n_));
    for (auto& o : orbit) o.fill(0);
    const auto k4 = complete_four();

    std::vector<std::int64_t> common(static_cast<std::size_t>(n_), 0);
    for (int x = 0; x < n_; ++x) {
      auto& o = orbit[static_cast<std::size_t>(x)];
      const auto& nx = adj_[static_cast<std::size_t>(x)];
      const std::int64_t dx = deg(x);
      // Each f_* accumulates a known linear combination of orbit counts.
      std::int64_t f_12_14 = 0, f_10_13 = 0, f_13_14 = 0, f_11_13 = 0, f_7_11 = 0, f_5_8 = 0;
      std::int64_t f_6_9 = 0, f_9_12 = 0, f_4_8 = 0, f_8_12 = 0;
      const std::int64_t f_14 = k4[static_cast<std::size_t>(x)];

      std::fill(common.begin(), common.end(), 0);
      o[0] = dx;

      // x as a middle node.
      for (std::size_t i = 0; i < nx.size(); ++i) {
        const int y = nx[i];
        const std::int64_t ty = tri(x, y);
        for (int z : adj_[static_cast<std::size_t>(y)]) {
          if (z == x) continue;
          if (adjacent(x, z)) {
            if (z < y) {
              const std::int64_t tz = tri(y, z);
              f_12_14 += tz - 1;
              f_10_13 += (deg(y) - 1 - tz) + (deg(z) - 1 - tz);
            }
          } else {
            ++common[static_cast<std::size_t>(z)];
          }
        }
        for (std::size_t j = i + 1; j < nx.size(); ++j) {
          const int z = nx[j];
          const std::int64_t tz = tri(x, z);
          if (adjacent(y, z)) {
            ++o[3];
            f_13_14 += (ty - 1) + (tz - 1);
            f_11_13 += (dx - 1 - ty) + (dx - 1 - tz);
          } else {
            ++o[2];
            f_7_11 += (dx - 1 - ty - 1) + (dx - 1 - tz - 1);
            f_5_8 += (deg(y) - 1 - ty) + (deg(z) - 1 - tz);
          }
        }
      }
      // x as an end node.
      for (int y : nx) {
        const std::int64_t ty = tri(x, y);
        for (int z : adj_[static_cast<std::size_t>(y)]) {
          if (z == x || adjacent(x, z)) continue;
          const std::int64_t tz = tri(y, z);
          ++o[1];
          f_6_9 += deg(y) - 1 - ty - 1;
          f_9_12 += tz;
          f_4_8 += deg(z) - 1 - tz;
          f_8_12 += common[static_cast<std::size_t>(z)] - 1;
        }
      }

      o[14] = f_14;
      o[13] = (f_13_14 - 6 * f_14) / 2;
      o[12] = f_12_14 - 3 * f_14;
      o[11] = (f_11_13 - f_13_14 + 6 * f_14) / 2;
      o[10] = f_10_13 - f_13_14 + 6 * f_14;
      o[9] = (f_9_12 - 2 * f_12_14 + 6 * f_14) / 2;
      o[8] = (f_8_12 - 2 * f_12_14 + 6 * f_14) / 2;
      o[7] = (f_13_14 + f_7_11 - f_11_13 - 6 * f_14) / 6;
      o[6] = (2 * f_12_14 + f_6_9 - f_9_12 - 6 * f_14) / 2;
      o[5] = 2 * f_12_14 + f_5_8 - f_8_12 - 6 * f_14;
      o[4] = 2 * f_12_14 + f_4_8 - f_8_12 - 6 * f_14;
    }
    return orbit;
  }

 private:
  bool adjacent(int a, int b) const { return matrix_[static_cast<std::size_t>(a) * n_ + b] != 0; }
  std::int64_t deg(int v) const { return deg_[static_cast<std::size_t>(v)]; }

  // Number of triangles through edge (a, b).
  std::int64_t tri(int a, int b) const {
    std::int64_t t = 0;
    for (int c : adj_[static_cast<std::size_t>(a)]) {
      if (c != b && adjacent(b, c)) ++t;
    }
    return t;
  }

  // Per-node count of K4 subgraphs.
  std::vector<std::int64_t> complete_four() const {
    std::vector<std::int64_t> c4(static_cast<std::size_t>(n_), 0);
    for (int a = 0; a < n_; ++a) {
      for (int b : adj_[static_cast<std::size_t>(a)]) {
        if (b <= a) continue;
        for (int c : adj_[static_cast<std::size_t>(b)]) {
          if (c <= b || !adjacent(a, c)) continue;
          for (int d : adj_[static_cast<std::size_t>(c)]) {
            if (d <= c || !adjacent(a, d) || !adjacent(b, d)) continue;
            for (int v : {a, b, c, d}) ++c4[static_cast<std::size_t>(v)];
          }
        }
      }
    }
    return c4;
  }

  int n_;
  std::vector<std::vector<int>> adj_;
  std::vector<char> matrix_;
  std::vector<std::int64_t> deg_;
};

double fold_angle(double gap) { return std::min(gap, 2.0 * std::numbers::pi - gap); }

}  // namespace

std::vector<OrbitCounts> gdv(const SketchGraph& g) {
  g.validate();
  return OrbitCounter(g).count();
}

std::array<double, 3> inner_angles(const SketchGraph& g, int node) {
  if (node < 0 || static_cast<std::size_t>(node) >= g.nodes.size()) {
    throw Error("inner_angles: node index " + std::to_string(node) + " out of range");
  }
  const Point c = g.nodes[static_cast<std::size_t>(node)];
  std::vector<double> dirs;
  for (auto [a, b] : g.edges) {
    int other = -1;
    if (a == node) other = b;
    if (b == node) other = a;
    if (other < 0) continue;
    const Point p = g.nodes[static_cast<std::size_t>(other)];
    dirs.push_back(std::atan2(p.y - c.y, p.x - c.x));
  }
  std::array<double, 3> out{0.0, 0.0, 0.0};
  if (dirs.size() < 2) return out;
  if (dirs.size() == 2) {
    out[0] = fold_angle(std::abs(dirs[0] - dirs[1]));
    return out;
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<double> gaps;
  for (std::size_t i = 0; i + 1 < dirs.size(); ++i) gaps.push_back(dirs[i + 1] - dirs[i]);
  gaps.push_back(dirs.front() + 2.0 * std::numbers::pi - dirs.back());
  std::sort(gaps.begin(), gaps.end(), std::greater<>());
  for (std::size_t i = 0; i < 3; ++i) out[i] = fold_angle(gaps[i]);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

NodeFeatureMatrix assemble_features(const SketchGraph& g, const FeatureOptions& opt) {
  NodeFeatureMatrix f;
  if (g.nodes.empty()) return f;
  f.rows = g.nodes.size();
  f.values.assign(f.rows * kNodeFeatureDim, 0.0);
  f.raw_gdv = gdv(g);

  double min_x = g.nodes[0].x, max_x = min_x, min_y = g.nodes[0].y, max_y = min_y;
  for (Point p : g.nodes) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  auto norm = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.5; };

  for (std::size_t r = 0; r < f.rows; ++r) {
    f.at(r, kCoordOffset) = norm(g.nodes[r].x, min_x, max_x);
    f.at(r, kCoordOffset + 1) = norm(g.nodes[r].y, min_y, max_y);
    for (int k = 0; k < kOrbitCount; ++k) {
      const double count = static_cast<double>(f.raw_gdv[r][static_cast<std::size_t>(k)]);
      f.at(r, static_cast<std::size_t>(kOrbitOffset + k)) = opt.log_gdv ? std::log1p(count) : count;
    }
    const auto ang = inner_angles(g, static_cast<int>(r));
    for (int k = 0; k < kAngleDims; ++k) {
      f.at(r, static_cast<std::size_t>(kAngleOffset + k)) = ang[static_cast<std::size_t>(k)] / std::numbers::pi;
    }
  }
  return f;
}

void write_features_csv(std::ostream& out, const NodeFeatureMatrix& f) {
  out << "node,x,y";
  for (int k = 0; k < kOrbitCount; ++k) out << ",orbit" << k;
  out << ",angle0,angle1,angle2\n";
  out.precision(17);
  for (std::size_t r = 0; r < f.rows; ++r) {
    out << r;
    for (int c = 0; c < kNodeFeatureDim; ++c) out << ',' << f.at(r, static_cast<std::size_t>(c));
    out << '\n';
  }
}

}  // namespace cubegraph
