#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "sfit/data/dataset.hpp"
#include "sfit/rng.hpp"

namespace sfit {

enum class Shift { ColorTint, Brightness, Saturation };

inline const char* shift_name(Shift s) {
  switch (s) {
    case Shift::ColorTint: return "color_tint";
    case Shift::Brightness: return "brightness";
    case Shift::Saturation: return "saturation";
  }
  return "?";
}

// Photometric shift magnitudes. Renderer output stays inside [0.166, 0.834],
// so the default tint never clips and the target/source channel-mean
// difference equals the tint vector up to quantization noise.
struct SyntheticParams {
  std::array<float, 3> tint{0.16f, -0.15f, 0.12f};
  float brightness = 0.65f;
  float saturation = 0.25f;
};

namespace detail {

constexpr int kSynthSize = 32;
constexpr int kSynthClasses = 10;

struct Glyph {
  int cls;
  float cx, cy, scale, rot;
};

inline float rotate_x(float dx, float dy, float rot) {
  return dx * std::cos(rot) + dy * std::sin(rot);
}
inline float rotate_y(float dx, float dy, float rot) {
  return -dx * std::sin(rot) + dy * std::cos(rot);
}

inline float bar_sdf(float dx, float dy, float half_len, float half_thick) {
  const float ax = std::abs(dx) - half_len;
  const float ay = std::abs(dy) - half_thick;
  return std::max(ax, ay);
}

// Signed distance (negative inside) for the ten glyph classes, evaluated in
// glyph-local coordinates.
inline float glyph_sdf(const Glyph& g, float px, float py) {
  const float dx = rotate_x(px - g.cx, py - g.cy, g.rot);
  const float dy = rotate_y(px - g.cx, py - g.cy, g.rot);
  const float s = g.scale;
  const float r = std::sqrt(dx * dx + dy * dy);
  switch (g.cls) {
    case 0:  // disk
      return r - s;
    case 1:  // ring
      return std::abs(r - s * 0.82f) - s * 0.30f;
    case 2:  // filled square
      return std::max(std::abs(dx), std::abs(dy)) - s * 0.85f;
    case 3:  // square outline
      return std::abs(std::max(std::abs(dx), std::abs(dy)) - s * 0.80f) -
             s * 0.26f;
    case 4:  // horizontal bar
      return bar_sdf(dx, dy, s, s * 0.32f);
    case 5:  // vertical bar
      return bar_sdf(dy, dx, s, s * 0.32f);
    case 6:  // diagonal stripe
    {
      const float ux = rotate_x(dx, dy, 0.785398163f);
      const float uy = rotate_y(dx, dy, 0.785398163f);
      return bar_sdf(ux, uy, s * 1.15f, s * 0.30f);
    }
    case 7:  // plus
      return std::min(bar_sdf(dx, dy, s, s * 0.30f),
                      bar_sdf(dy, dx, s, s * 0.30f));
    case 8:  // X
    {
      const float ux = rotate_x(dx, dy, 0.785398163f);
      const float uy = rotate_y(dx, dy, 0.785398163f);
      return std::min(bar_sdf(ux, uy, s * 1.05f, s * 0.28f),
                      bar_sdf(uy, ux, s * 1.05f, s * 0.28f));
    }
    case 9:  // triangle (upward)
    {
      // max of signed half-plane distances over the three edges
      const float ax = 0.f, ay = -s;
      const float bx = s * 0.92f, by = s * 0.72f;
      const float cx2 = -s * 0.92f, cy2 = s * 0.72f;
      auto edge = [&](float x0, float y0, float x1, float y1) {
        const float ex = x1 - x0, ey = y1 - y0;
        const float len = std::sqrt(ex * ex + ey * ey);
        // outward normal for counter-clockwise vertex order
        return ((dx - x0) * ey - (dy - y0) * ex) / len;
      };
      return std::max({edge(ax, ay, bx, by), edge(bx, by, cx2, cy2),
                       edge(cx2, cy2, ax, ay)});
    }
    default:
      throw ContractError("glyph_sdf: unknown class");
  }
}

inline void render_glyph(const Glyph& g, const std::array<float, 3>& fg,
                         const std::array<float, 3>& bg, Rng& rng,
                         std::vector<float>& chw) {
  const int n = kSynthSize;
  chw.assign(static_cast<std::size_t>(3) * n * n, 0.f);
  std::vector<float> alpha(static_cast<std::size_t>(n) * n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const float d =
          glyph_sdf(g, static_cast<float>(x) + 0.5f, static_cast<float>(y) + 0.5f);
      float a = 0.5f - d / 1.6f;  // ~1.6px soft edge
      a = a < 0.f ? 0.f : (a > 1.f ? 1.f : a);
      alpha[static_cast<std::size_t>(y) * n + x] = a;
    }
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        float noise = static_cast<float>(rng.normal()) * 0.008f;
        noise = noise < -0.024f ? -0.024f : (noise > 0.024f ? 0.024f : noise);
        const float a = alpha[static_cast<std::size_t>(y) * n + x];
        chw[(static_cast<std::size_t>(c) * n + y) * n + x] =
            bg[static_cast<std::size_t>(c)] +
            a * (fg[static_cast<std::size_t>(c)] -
                 bg[static_cast<std::size_t>(c)]) +
            noise;
      }
}

inline void apply_shift(Shift shift, const SyntheticParams& p,
                        std::vector<float>& chw) {
  const std::size_t plane = chw.size() / 3;
  switch (shift) {
    case Shift::ColorTint:
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < plane; ++i) chw[c * plane + i] += p.tint[c];
      break;
    case Shift::Brightness:
      for (float& v : chw) v *= p.brightness;
      break;
    case Shift::Saturation:
      for (std::size_t i = 0; i < plane; ++i) {
        const float gray =
            (chw[i] + chw[plane + i] + chw[2 * plane + i]) / 3.f;
        for (std::size_t c = 0; c < 3; ++c) {
          float& v = chw[c * plane + i];
          v = gray + p.saturation * (v - gray);
        }
      }
      break;
  }
  for (float& v : chw) v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
}

}  // namespace detail

// Deterministic desk-scale domain pair: ten glyph classes rendered at
// 3x32x32; the target is the same rendering with a photometric shift
// applied, so the domains differ in style only. Labels are balanced. The
// Test split draws an independent stream from the same seed.
inline DomainPair make_synthetic_pair(std::uint64_t seed, int n_per_class,
                                      Shift shift, Split split = Split::Train,
                                      const SyntheticParams& params = {}) {
  if (n_per_class < 10)
    throw ContractError("make_synthetic_pair: n_per_class must be >= 10");
  const int size = detail::kSynthSize;
  DomainPair pair;
  pair.shared_classes = detail::kSynthClasses;
  pair.source = Dataset(3, size, size, detail::kSynthClasses,
                        std::string("synth-source-") + shift_name(shift), split);
  pair.target = Dataset(3, size, size, detail::kSynthClasses,
                        std::string("synth-target-") + shift_name(shift), split);

  Rng root(seed);
  Rng rng = root.split(split == Split::Train ? 1 : 2);
  std::vector<float> canvas, shifted;
  for (int cls = 0; cls < detail::kSynthClasses; ++cls)
    for (int i = 0; i < n_per_class; ++i) {
      detail::Glyph g;
      g.cls = cls;
      g.cx = 16.f + static_cast<float>(rng.uniform(-2.5, 2.5));
      g.cy = 16.f + static_cast<float>(rng.uniform(-2.5, 2.5));
      g.scale = static_cast<float>(rng.uniform(7.0, 10.5));
      g.rot = static_cast<float>(rng.uniform(-0.12, 0.12));
      std::array<float, 3> fg, bg;
      const float fg_base = static_cast<float>(rng.uniform(0.60, 0.78));
      const float bg_base = static_cast<float>(rng.uniform(0.22, 0.36));
      for (int c = 0; c < 3; ++c) {
        fg[static_cast<std::size_t>(c)] =
            fg_base + static_cast<float>(rng.uniform(-0.03, 0.03));
        bg[static_cast<std::size_t>(c)] =
            bg_base + static_cast<float>(rng.uniform(-0.03, 0.03));
      }
      detail::render_glyph(g, fg, bg, rng, canvas);
      shifted = canvas;
      detail::apply_shift(shift, params, shifted);
      pair.source.append(canvas, cls);
      pair.target.append(shifted, cls);
    }
  pair.validate();
  return pair;
}

}  // namespace sfit
