#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "sfit/error.hpp"

namespace sfit {

// Bilinear resize of one plane, half-pixel-center convention.
inline void bilinear_resize(const float* src, int sh, int sw, float* dst,
                            int dh, int dw) {
  const float sy = static_cast<float>(sh) / dh;
  const float sx = static_cast<float>(sw) / dw;
  for (int y = 0; y < dh; ++y) {
    float fy = (static_cast<float>(y) + 0.5f) * sy - 0.5f;
    fy = fy < 0.f ? 0.f : fy;
    int y0 = static_cast<int>(fy);
    if (y0 > sh - 1) y0 = sh - 1;
    const int y1 = y0 + 1 > sh - 1 ? sh - 1 : y0 + 1;
    const float wy = fy - static_cast<float>(y0);
    for (int x = 0; x < dw; ++x) {
      float fx = (static_cast<float>(x) + 0.5f) * sx - 0.5f;
      fx = fx < 0.f ? 0.f : fx;
      int x0 = static_cast<int>(fx);
      if (x0 > sw - 1) x0 = sw - 1;
      const int x1 = x0 + 1 > sw - 1 ? sw - 1 : x0 + 1;
      const float wx = fx - static_cast<float>(x0);
      const float a = src[y0 * sw + x0], b = src[y0 * sw + x1];
      const float c = src[y1 * sw + x0], d = src[y1 * sw + x1];
      dst[y * dw + x] = a * (1 - wy) * (1 - wx) + b * (1 - wy) * wx +
                        c * wy * (1 - wx) + d * wy * wx;
    }
  }
}

struct PpmImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major
};

// Binary PPM (P6), the lossless raster format used for image grids.
inline void write_ppm(const std::string& path, const PpmImage& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "P6\n" << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.rgb.data()),
          static_cast<std::streamsize>(img.rgb.size()));
  if (!f) throw IoError("write failed: " + path);
}

inline PpmImage read_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::string magic;
  f >> magic;
  if (magic != "P6") throw IoError("not a P6 ppm: " + path);
  PpmImage img;
  int maxval = 0;
  f >> img.width >> img.height >> maxval;
  if (!f || maxval != 255 || img.width <= 0 || img.height <= 0)
    throw IoError("bad ppm header: " + path);
  f.get();  // single whitespace after header
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  f.read(reinterpret_cast<char*>(img.rgb.data()),
         static_cast<std::streamsize>(img.rgb.size()));
  if (f.gcount() != static_cast<std::streamsize>(img.rgb.size()))
    throw IoError("truncated ppm: " + path);
  return img;
}

}  // namespace sfit
