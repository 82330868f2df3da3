#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace cubegraph {

// Grayscale raster, row-major, 0 = black, 255 = white.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> intensities;

  RasterImage() = default;
  RasterImage(int w, int h, std::uint8_t fill = 255);
  RasterImage(int w, int h, std::vector<std::uint8_t> values);

  std::uint8_t at(int x, int y) const { return intensities[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return intensities[index(x, y)]; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
};

// Row-major mask; 1 = stroke foreground.
struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;

  BinaryImage() = default;
  BinaryImage(int w, int h);

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool at(int x, int y) const { return mask[index(x, y)] != 0; }
  // Out-of-range reads are background.
  bool get(int x, int y) const { return contains(x, y) && at(x, y); }
  void set(int x, int y, bool v) { mask[index(x, y)] = v ? 1 : 0; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  std::size_t count() const;

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;
};

struct RasterConfig {
  int window_radius = 15;   // half-size of the local-mean window
  double offset = 10.0;     // intensity margin below the local mean
  int min_component_px = 20;
  bool invert = false;      // true for light strokes on dark background

  void validate() const;
};

RasterImage load_image(const std::filesystem::path& path);
void write_png(const RasterImage& img, const std::filesystem::path& path);
void write_pgm(const RasterImage& img, const std::filesystem::path& path);

// Foreground iff intensity < local mean (edge-clamped window) - offset.
BinaryImage adaptive_threshold(const RasterImage& img, const RasterConfig& cfg);

// Drops 8-connected components smaller than cfg.min_component_px.
BinaryImage denoise(const BinaryImage& bin, const RasterConfig& cfg);

// Two-subiteration thinning to a one-pixel-wide, topology-preserving skeleton.
BinaryImage skeletonize(const BinaryImage& bin);

// Number of 8-connected foreground components.
std::size_t count_components(const BinaryImage& bin);

}  // namespace cubegraph
