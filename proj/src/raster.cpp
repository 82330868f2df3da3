#include "cubegraph/raster.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>

#include "cubegraph/error.hpp"

namespace cubegraph {

RasterImage::RasterImage(int w, int h, std::uint8_t fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw Error("RasterImage: dimensions must be positive");
  intensities.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
}

RasterImage::RasterImage(int w, int h, std::vector<std::uint8_t> values)
    : width(w), height(h), intensities(std::move(values)) {
  if (w <= 0 || h <= 0) throw Error("RasterImage: dimensions must be positive");
  if (intensities.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
    throw Error("RasterImage: expected " + std::to_string(w * h) + " intensities, got " +
                std::to_string(intensities.size()));
  }
}

BinaryImage::BinaryImage(int w, int h) : width(w), height(h) {
  mask.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
}

std::size_t BinaryImage::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

void RasterConfig::validate() const {
  if (window_radius < 1) throw ConfigError("raster.window_radius must be >= 1");
  if (min_component_px < 1) throw ConfigError("raster.min_component_px must be >= 1");
}

BinaryImage adaptive_threshold(const RasterImage& img, const RasterConfig& cfg) {
  cfg.validate();
  const int w = img.width;
  const int h = img.height;
  const int r = cfg.window_radius;
  auto value = [&](int x, int y) -> std::int64_t {
    const int v = img.at(x, y);
    return cfg.invert ? 255 - v : v;
  };
  auto clamp_x = [w](int x) { return std::clamp(x, 0, w - 1); };
  auto clamp_y = [h](int y) { return std::clamp(y, 0, h - 1); };

  // Separable box sum with edge clamping: every window holds (2r+1)^2 samples.
  std::vector<std::int64_t> rows(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    std::int64_t s = 0;
    for (int dx = -r; dx <= r; ++dx) s += value(clamp_x(dx), y);
    for (int x = 0; x < w; ++x) {
      rows[static_cast<std::size_t>(y) * w + x] = s;
      s += value(clamp_x(x + r + 1), y) - value(clamp_x(x - r), y);
    }
  }
  const double n = static_cast<double>(2 * r + 1) * static_cast<double>(2 * r + 1);
  BinaryImage out(w, h);
  for (int x = 0; x < w; ++x) {
    std::int64_t s = 0;
    for (int dy = -r; dy <= r; ++dy) s += rows[static_cast<std::size_t>(clamp_y(dy)) * w + x];
    for (int y = 0; y < h; ++y) {
      const double mean = static_cast<double>(s) / n;
      if (static_cast<double>(value(x, y)) < mean - cfg.offset) out.set(x, y, true);
      s += rows[static_cast<std::size_t>(clamp_y(y + r + 1)) * w + x] -
           rows[static_cast<std::size_t>(clamp_y(y - r)) * w + x];
    }
  }
  return out;
}

namespace {

constexpr std::array<int, 8> kDx = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kDy = {-1, -1, 0, 1, 1, 1, 0, -1};

// Labels 8-connected components; returns per-pixel label (-1 background) and sizes.
std::pair<std::vector<int>, std::vector<std::size_t>> label_components(const BinaryImage& bin) {
  std::vector<int> label(bin.mask.size(), -1);
  std::vector<std::size_t> sizes;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < bin.height; ++y) {
    for (int x = 0; x < bin.width; ++x) {
      if (!bin.at(x, y) || label[bin.index(x, y)] >= 0) continue;
      const int id = static_cast<int>(sizes.size());
      std::size_t size = 0;
      label[bin.index(x, y)] = id;
      stack.push_back({x, y});
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        ++size;
        for (int k = 0; k < 8; ++k) {
          const int nx = cx + kDx[k];
          const int ny = cy + kDy[k];
          if (!bin.get(nx, ny) || label[bin.index(nx, ny)] >= 0) continue;
          label[bin.index(nx, ny)] = id;
          stack.push_back({nx, ny});
        }
      }
      sizes.push_back(size);
    }
  }
  return {std::move(label), std::move(sizes)};
}

std::array<bool, 8> ring(const BinaryImage& b, int x, int y) {
  std::array<bool, 8> n{};
  for (int k = 0; k < 8; ++k) n[k] = b.get(x + kDx[k], y + kDy[k]);
  return n;
}

// Simple-point test for (8,4) connectivity: exactly one 8-component of
// foreground in the ring, and exactly one 4-component of background in the
// ring that touches a 4-neighbour of the centre.
bool is_simple(const std::array<bool, 8>& n) {
  std::array<int, 8> parent{};
  for (int i = 0; i < 8; ++i) parent[i] = i;
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };

  for (int i = 0; i < 8; ++i) {
    const int j = (i + 1) % 8;
    if (n[i] && n[j]) unite(i, j);
  }
  for (int i = 0; i < 8; i += 2) {
    const int j = (i + 2) % 8;
    if (n[i] && n[j]) unite(i, j);
  }
  int fg = 0;
  for (int i = 0; i < 8; ++i) {
    if (n[i] && find(i) == i) ++fg;
  }
  if (fg != 1) return false;

  for (int i = 0; i < 8; ++i) parent[i] = i;
  for (int i = 0; i < 8; ++i) {
    const int j = (i + 1) % 8;
    if (!n[i] && !n[j]) unite(i, j);
  }
  std::array<bool, 8> touches{};
  for (int i = 0; i < 8; i += 2) {
    if (!n[i]) touches[find(i)] = true;
  }
  int bg = 0;
  for (int i = 0; i < 8; ++i) {
    if (touches[i]) ++bg;
  }
  return bg == 1;
}

int neighbour_count(const std::array<bool, 8>& n) {
  return static_cast<int>(std::count(n.begin(), n.end(), true));
}

int transitions(const std::array<bool, 8>& n) {
  int a = 0;
  for (int i = 0; i < 8; ++i) {
    if (!n[i] && n[(i + 1) % 8]) ++a;
  }
  return a;
}

}  // namespace

std::size_t count_components(const BinaryImage& bin) { return label_components(bin).second.size(); }

BinaryImage denoise(const BinaryImage& bin, const RasterConfig& cfg) {
  cfg.validate();
  auto [label, sizes] = label_components(bin);
  BinaryImage out(bin.width, bin.height);
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] >= 0 && sizes[static_cast<std::size_t>(label[i])] >= static_cast<std::size_t>(cfg.min_component_px)) {
      out.mask[i] = 1;
    }
  }
  return out;
}

BinaryImage skeletonize(const BinaryImage& bin) {
  BinaryImage img = bin;
  std::vector<std::pair<int, int>> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      candidates.clear();
      for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
          if (!img.at(x, y)) continue;
          const auto n = ring(img, x, y);
          const int b = neighbour_count(n);
          if (b < 2 || b > 6 || transitions(n) != 1) continue;
          // n[0]=N, n[2]=E, n[4]=S, n[6]=W
          const bool ok = pass == 0 ? (!(n[0] && n[2] && n[4]) && !(n[2] && n[4] && n[6]))
                                    : (!(n[0] && n[2] && n[6]) && !(n[0] && n[4] && n[6]));
          if (ok) candidates.push_back({x, y});
        }
      }
      // Deleting candidates one at a time, re-checked against the current
      // image, keeps two-pixel-thick runs from vanishing.
      for (auto [x, y] : candidates) {
        const auto n = ring(img, x, y);
        if (neighbour_count(n) >= 2 && is_simple(n)) {
          img.set(x, y, false);
          changed = true;
        }
      }
    }
  }

  // Remove staircase corners so that no 2x2 block survives.
  changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        if (!img.at(x, y)) continue;
        const auto n = ring(img, x, y);
        const bool corner = (n[0] && n[2]) || (n[2] && n[4]) || (n[4] && n[6]) || (n[6] && n[0]);
        if (corner && neighbour_count(n) >= 2 && is_simple(n)) {
          img.set(x, y, false);
          changed = true;
        }
      }
    }
  }
  return img;
}

}  // namespace cubegraph
