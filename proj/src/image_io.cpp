#include <png.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "cubegraph/error.hpp"
#include "cubegraph/raster.hpp"

namespace cubegraph {

namespace {

RasterImage load_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError(path.string() + ": corrupt PNG (" + image.message + ")");
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> rgb(PNG_IMAGE_SIZE(image));
  png_color white{255, 255, 255};
  if (!png_image_finish_read(&image, &white, rgb.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError(path.string() + ": corrupt PNG (" + msg + ")");
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const int sum = rgb[3 * i] + rgb[3 * i + 1] + rgb[3 * i + 2];
    gray[i] = static_cast<std::uint8_t>((sum + 1) / 3);
  }
  return RasterImage(w, h, std::move(gray));
}

void skip_pgm_space(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

RasterImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  int w = 0, h = 0, maxval = 0;
  skip_pgm_space(in);
  in >> w;
  skip_pgm_space(in);
  in >> h;
  skip_pgm_space(in);
  in >> maxval;
  if (!in || magic != "P5" || w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw IoError(path.string() + ": corrupt PGM header");
  }
  in.get();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const std::size_t bytes = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(n * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw IoError(path.string() + ": truncated PGM data");
  }
  std::vector<std::uint8_t> gray(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int v = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
    gray[i] = static_cast<std::uint8_t>(std::lround(255.0 * v / maxval));
  }
  return RasterImage(w, h, std::move(gray));
}

}  // namespace

RasterImage load_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError(path.string() + ": no such file");
  unsigned char head[8] = {};
  probe.read(reinterpret_cast<char*>(head), 8);
  const auto got = probe.gcount();
  probe.close();
  static constexpr unsigned char kPng[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (got == 8 && std::memcmp(head, kPng, 8) == 0) return load_png(path);
  if (got >= 2 && head[0] == 'P' && head[1] == '5') return load_pgm(path);
  throw IoError(path.string() + ": unsupported image format (expected PNG or binary PGM)");
}

void write_png(const RasterImage& img, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.intensities.data(), 0, nullptr)) {
    throw IoError(path.string() + ": cannot write PNG (" + image.message + ")");
  }
}

void write_pgm(const RasterImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.intensities.data()),
            static_cast<std::streamsize>(img.intensities.size()));
}

}  // namespace cubegraph
