#include "cubegraph/vectorize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <ostream>

#include "cubegraph/error.hpp"

namespace cubegraph {

double Polyline::length() const {
  double s = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) s += distance(points[i - 1], points[i]);
  return s;
}

void SimplifyConfig::validate() const {
  if (!(epsilon >= 0.0)) throw ConfigError("vectorize.epsilon must be >= 0");
  if (!(spur_px >= 0.0)) throw ConfigError("vectorize.spur_px must be >= 0");
  if (!(snap_px >= 0.0)) throw ConfigError("vectorize.snap_px must be >= 0");
}

namespace {

constexpr std::array<int, 8> kDx = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kDy = {-1, -1, 0, 1, 1, 1, 0, -1};

struct Pixel {
  int x;
  int y;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

Point to_point(Pixel p) { return {static_cast<double>(p.x), static_cast<double>(p.y)}; }

class SkeletonTracer {
 public:
  explicit SkeletonTracer(const BinaryImage& skel) : skel_(skel), cluster_(skel.mask.size(), -1),
                                                     visited_(skel.mask.size(), 0) {}

  std::vector<Polyline> run() {
    find_clusters();
    std::vector<Polyline> out;

    // Chains leaving each junction cluster.
    for (std::size_t c = 0; c < clusters_.size(); ++c) {
      for (Pixel p : clusters_[c].pixels) {
        for (Pixel q : neighbours(p)) {
          if (cluster_of(q) >= 0 || visited(q)) continue;
          out.push_back(walk(p, q));
        }
      }
    }
    // Cluster pixels that no chain passed through get a stub to the terminal.
    for (std::size_t c = 0; c < clusters_.size(); ++c) {
      for (Pixel p : clusters_[c].pixels) {
        if (!covered(p) && p != clusters_[c].terminal) {
          out.push_back(Polyline{{to_point(clusters_[c].terminal), to_point(p)}});
        }
      }
    }
    // Open strokes with no junction.
    for (Pixel p : all_pixels_) {
      if (visited(p) || degree(p) != 1) continue;
      mark(p);
      std::vector<Pixel> chain{p};
      Pixel prev = p;
      Pixel cur = neighbours(p).front();
      while (true) {
        chain.push_back(cur);
        mark(cur);
        if (degree(cur) != 2) break;
        Pixel next = other_neighbour(cur, prev);
        prev = cur;
        cur = next;
      }
      out.push_back(to_polyline(chain));
    }
    // Isolated cycles, split at the lexicographically smallest pixel.
    for (Pixel p : all_pixels_) {
      if (visited(p) || degree(p) != 2) continue;
      std::vector<Pixel> chain{p};
      mark(p);
      auto nb = neighbours(p);
      Pixel prev = p;
      Pixel cur = std::min(nb[0], nb[1]);
      while (cur != p) {
        chain.push_back(cur);
        mark(cur);
        Pixel next = other_neighbour(cur, prev);
        prev = cur;
        cur = next;
      }
      chain.push_back(p);
      out.push_back(to_polyline(chain));
    }
    return out;
  }

 private:
  struct Cluster {
    std::vector<Pixel> pixels;
    Pixel terminal{};
  };

  std::size_t idx(Pixel p) const { return skel_.index(p.x, p.y); }
  bool fg(Pixel p) const { return skel_.get(p.x, p.y); }
  int cluster_of(Pixel p) const { return cluster_[idx(p)]; }
  bool visited(Pixel p) const { return visited_[idx(p)] != 0; }
  void mark(Pixel p) { visited_[idx(p)] = 1; }
  bool covered(Pixel p) const { return visited_[idx(p)] != 0; }

  // Neighbours in (x, y) lexicographic order.
  std::vector<Pixel> neighbours(Pixel p) const {
    std::vector<Pixel> out;
    for (int k = 0; k < 8; ++k) {
      Pixel q{p.x + kDx[k], p.y + kDy[k]};
      if (fg(q)) out.push_back(q);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  int degree(Pixel p) const { return static_cast<int>(neighbours(p).size()); }

  Pixel other_neighbour(Pixel cur, Pixel prev) const {
    for (Pixel q : neighbours(cur)) {
      if (q != prev) return q;
    }
    return prev;
  }

  void find_clusters() {
    for (int x = 0; x < skel_.width; ++x) {
      for (int y = 0; y < skel_.height; ++y) {
        if (skel_.at(x, y)) all_pixels_.push_back({x, y});
      }
    }
    for (Pixel p : all_pixels_) {
      if (degree(p) < 3 || cluster_of(p) >= 0) continue;
      const int id = static_cast<int>(clusters_.size());
      Cluster c;
      std::vector<Pixel> stack{p};
      cluster_[idx(p)] = id;
      while (!stack.empty()) {
        Pixel cur = stack.back();
        stack.pop_back();
        c.pixels.push_back(cur);
        for (Pixel q : neighbours(cur)) {
          if (degree(q) >= 3 && cluster_of(q) < 0) {
            cluster_[idx(q)] = id;
            stack.push_back(q);
          }
        }
      }
      std::sort(c.pixels.begin(), c.pixels.end());
      double cx = 0.0, cy = 0.0;
      for (Pixel q : c.pixels) {
        cx += q.x;
        cy += q.y;
      }
      cx /= static_cast<double>(c.pixels.size());
      cy /= static_cast<double>(c.pixels.size());
      double best = std::numeric_limits<double>::infinity();
      for (Pixel q : c.pixels) {
        const double d = std::hypot(q.x - cx, q.y - cy);
        if (d < best) {
          best = d;
          c.terminal = q;
        }
      }
      mark(c.terminal);
      clusters_.push_back(std::move(c));
    }
  }

  // Walks from cluster pixel `start` through `first` to the next endpoint or cluster.
  Polyline walk(Pixel start, Pixel first) {
    const Cluster& from = clusters_[static_cast<std::size_t>(cluster_of(start))];
    std::vector<Pixel> chain;
    chain.push_back(from.terminal);
    if (start != from.terminal) chain.push_back(start);
    mark(start);
    Pixel prev = start;
    Pixel cur = first;
    while (true) {
      if (cluster_of(cur) >= 0) {
        const Cluster& to = clusters_[static_cast<std::size_t>(cluster_of(cur))];
        chain.push_back(cur);
        mark(cur);
        if (cur != to.terminal) chain.push_back(to.terminal);
        break;
      }
      chain.push_back(cur);
      mark(cur);
      if (degree(cur) != 2) break;
      Pixel next = other_neighbour(cur, prev);
      prev = cur;
      cur = next;
    }
    return to_polyline(chain);
  }

  static Polyline to_polyline(const std::vector<Pixel>& chain) {
    Polyline line;
    for (Pixel p : chain) {
      Point pt = to_point(p);
      if (line.points.empty() || line.points.back() != pt) line.points.push_back(pt);
    }
    if (line.points.size() == 1) line.points.push_back(line.points.front());
    return line;
  }

  const BinaryImage& skel_;
  std::vector<int> cluster_;
  std::vector<std::uint8_t> visited_;
  std::vector<Cluster> clusters_;
  std::vector<Pixel> all_pixels_;
};

void simplify_range(const std::vector<Point>& pts, std::size_t first, std::size_t last, double eps,
                    std::vector<char>& keep) {
  // Explicit stack keeps deep recursion off long strokes.
  std::vector<std::pair<std::size_t, std::size_t>> stack{{first, last}};
  while (!stack.empty()) {
    auto [a, b] = stack.back();
    stack.pop_back();
    if (b <= a + 1) continue;
    double worst = -1.0;
    std::size_t split = a;
    for (std::size_t i = a + 1; i < b; ++i) {
      const double d = segment_distance(pts[i], pts[a], pts[b]);
      if (d > worst) {
        worst = d;
        split = i;
      }
    }
    if (worst > eps) {
      keep[split] = 1;
      stack.push_back({split, b});
      stack.push_back({a, split});
    }
  }
}

}  // namespace

std::vector<Polyline> trace_polylines(const BinaryImage& skel) { return SkeletonTracer(skel).run(); }

Polyline simplify(const Polyline& line, const SimplifyConfig& cfg) {
  cfg.validate();
  const auto& pts = line.points;
  if (pts.size() <= 2) return line;
  std::vector<char> keep(pts.size(), 0);
  keep[0] = 1;
  keep[pts.size() - 1] = 1;
  simplify_range(pts, 0, pts.size() - 1, cfg.epsilon, keep);
  Polyline out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (keep[i]) out.points.push_back(pts[i]);
  }
  return out;
}

std::vector<Polyline> prune_spurs(std::vector<Polyline> lines, double max_length) {
  if (max_length <= 0.0) return lines;
  auto incidence = [](const std::vector<Polyline>& ls) {
    std::map<Point, int> count;
    for (const auto& l : ls) {
      ++count[l.front()];
      ++count[l.back()];
    }
    return count;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    auto count = incidence(lines);
    std::vector<Polyline> kept;
    for (auto& l : lines) {
      const int a = count[l.front()];
      const int b = count[l.back()];
      const bool spur = l.front() != l.back() && ((a == 1) != (b == 1)) && std::max(a, b) >= 3 &&
                        l.length() < max_length;
      if (spur) {
        changed = true;
      } else {
        kept.push_back(std::move(l));
      }
    }
    lines = std::move(kept);

    // Join pairs of strokes meeting at a point of incidence exactly two.
    count = incidence(lines);
    for (const auto& [pt, n] : count) {
      if (n != 2) continue;
      std::vector<std::size_t> at;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].front() == pt || lines[i].back() == pt) at.push_back(i);
      }
      if (at.size() != 2) continue;  // a closed stroke touching itself
      Polyline a = lines[at[0]];
      Polyline b = lines[at[1]];
      if (a.back() != pt) std::reverse(a.points.begin(), a.points.end());
      if (b.front() != pt) std::reverse(b.points.begin(), b.points.end());
      a.points.insert(a.points.end(), b.points.begin() + 1, b.points.end());
      lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(at[1]));
      lines[at[0]] = std::move(a);
      changed = true;
      break;  // incidence map is stale
    }
  }
  return lines;
}

void write_polylines_text(std::ostream& out, const std::vector<Polyline>& lines) {
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out << '\n';
    for (Point p : lines[i].points) out << p.x << ' ' << p.y << '\n';
  }
}

std::vector<Polyline> snap_junctions(std::vector<Polyline> lines, double max_shift, const std::set<Point>& fixed) {
  if (max_shift <= 0.0) return lines;
  std::map<Point, int> count;
  for (const auto& l : lines) {
    ++count[l.front()];
    ++count[l.back()];
  }
  const double max_interior = 135.0 * std::numbers::pi / 180.0;
  for (const auto& [junction, n] : count) {
    if (n < 3 || fixed.contains(junction)) continue;
    // Shortest first segment that ends in a sharp turn.
    std::size_t best_line = lines.size();
    bool best_front = true;
    double best_len = max_shift;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto& pts = lines[i].points;
      if (pts.size() < 3 || lines[i].closed()) continue;
      for (bool front : {true, false}) {
        const Point p = front ? pts[0] : pts[pts.size() - 1];
        if (p != junction) continue;
        const Point q = front ? pts[1] : pts[pts.size() - 2];
        const Point r = front ? pts[2] : pts[pts.size() - 3];
        const double len = distance(p, q);
        const Point a = p - q, b = r - q;
        const double interior = std::acos(std::clamp((a.x * b.x + a.y * b.y) / (len * distance(r, q)), -1.0, 1.0));
        if (len <= best_len && interior <= max_interior) {
          best_len = len;
          best_line = i;
          best_front = front;
        }
      }
    }
    if (best_line == lines.size()) continue;
    auto& chosen = lines[best_line].points;
    const Point q = best_front ? chosen[1] : chosen[chosen.size() - 2];
    const Point r = best_front ? chosen[2] : chosen[chosen.size() - 3];
    if (best_front) {
      chosen.erase(chosen.begin());
    } else {
      chosen.pop_back();
    }
    // The other side of the corner is the stroke leaving the junction most
    // nearly along q -> junction; the corner is where the two lines cross.
    Point target = q;
    const Point along = junction - q;
    double best_cos = std::cos(30.0 * std::numbers::pi / 180.0);
    std::optional<Point> side;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i == best_line) continue;
      const auto& pts = lines[i].points;
      for (bool front : {true, false}) {
        if ((front ? pts.front() : pts.back()) != junction) continue;
        const Point next = front ? pts[1] : pts[pts.size() - 2];
        const Point d = next - junction;
        const double c = (d.x * along.x + d.y * along.y) / (distance(next, junction) * distance(junction, q));
        if (c >= best_cos) {
          best_cos = c;
          side = next;
        }
      }
    }
    if (side) {
      const Point u = q - r, v = *side - junction;
      const double denom = u.x * v.y - u.y * v.x;
      if (std::abs(denom) > 1e-9 * distance(q, r) * distance(*side, junction)) {
        const Point w = junction - r;
        const double t = (w.x * v.y - w.y * v.x) / denom;
        const Point x = r + t * u;
        if (distance(x, q) <= max_shift) target = x;
      }
    }
    if (best_front) {
      chosen.front() = target;
    } else {
      chosen.back() = target;
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i == best_line) continue;
      auto& pts = lines[i].points;
      if (pts.front() == junction) {
        if (pts[1] == target) {
          pts.erase(pts.begin());
        } else {
          pts.front() = target;
        }
      }
      if (pts.size() >= 2 && pts.back() == junction) {
        if (pts[pts.size() - 2] == target) {
          pts.pop_back();
        } else {
          pts.back() = target;
        }
      }
    }
  }
  std::erase_if(lines, [](const Polyline& l) { return l.points.size() < 2 || (l.points.size() == 2 && l.front() == l.back()); });
  return lines;
}

std::vector<Polyline> refine_junctions(std::vector<Polyline> lines, double max_shift, std::set<Point>* refined) {
  if (max_shift <= 0.0) return lines;
  constexpr double kNear = 6.0, kFar = 24.0, kMaxRms = 1.0;
  std::map<Point, int> count;
  for (const auto& l : lines) {
    ++count[l.front()];
    ++count[l.back()];
  }
  struct Move {
    Point from, to;
  };
  std::vector<Move> moves;
  for (const auto& [junction, n] : count) {
    if (n < 3) continue;
    // Accumulates sum (I - d d^T) over fitted lines and the matching right side.
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
    int fitted = 0;
    for (const auto& l : lines) {
      if (l.closed()) continue;
      for (bool front : {true, false}) {
        if ((front ? l.front() : l.back()) != junction) continue;
        std::vector<Point> window;
        double along = 0.0;
        const std::size_t m = l.points.size();
        for (std::size_t k = 1; k < m; ++k) {
          const Point& prev = l.points[front ? k - 1 : m - k];
          const Point& cur = l.points[front ? k : m - 1 - k];
          along += distance(prev, cur);
          if (along > kFar) break;
          if (along >= kNear) window.push_back(cur);
        }
        if (window.size() < 6) continue;
        Point c{0, 0};
        for (const auto& p : window) c = c + p;
        c = (1.0 / static_cast<double>(window.size())) * c;
        double sxx = 0, sxy = 0, syy = 0;
        for (const auto& p : window) {
          sxx += (p.x - c.x) * (p.x - c.x);
          sxy += (p.x - c.x) * (p.y - c.y);
          syy += (p.y - c.y) * (p.y - c.y);
        }
        const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
        const double dx = std::cos(theta), dy = std::sin(theta);
        double rss = 0.0;
        for (const auto& p : window) {
          const double perp = -(p.x - c.x) * dy + (p.y - c.y) * dx;
          rss += perp * perp;
        }
        if (std::sqrt(rss / static_cast<double>(window.size())) > kMaxRms) continue;
        const double p11 = 1 - dx * dx, p12 = -dx * dy, p22 = 1 - dy * dy;
        a11 += p11;
        a12 += p12;
        a22 += p22;
        b1 += p11 * c.x + p12 * c.y;
        b2 += p12 * c.x + p22 * c.y;
        ++fitted;
      }
    }
    const double det = a11 * a22 - a12 * a12;
    if (fitted < 2 || det < 0.05 * fitted) continue;
    const Point x{(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det};
    if (distance(x, junction) <= max_shift) moves.push_back({junction, x});
  }
  for (const auto& mv : moves) {
    for (auto& l : lines) {
      if (l.points.front() == mv.from) l.points.front() = mv.to;
      if (l.points.back() == mv.from) l.points.back() = mv.to;
    }
    if (refined) refined->insert(mv.to);
  }
  return lines;
}

}  // namespace cubegraph
