// Copyright 2026 The AnyFace Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "anyface/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "anyface/errors.hpp"

namespace anyface {
namespace {

struct Color {
  std::uint8_t r, g, b;
};

constexpr Color kBackground{255, 255, 255};
constexpr Color kAxis{60, 60, 60};
constexpr Color kGrid{225, 225, 225};
constexpr Color kPalette[] = {
    {214, 69, 65},  {31, 119, 180}, {44, 160, 44},  {148, 103, 189},
    {255, 127, 14}, {140, 86, 75},  {23, 190, 207}, {188, 189, 34},
};

// 3x5 glyphs for numeric labels; rows are 3-bit masks, MSB = left pixel.
struct Glyph {
  char ch;
  std::uint8_t rows[5];
};
constexpr Glyph kGlyphs[] = {
    {'0', {0b111, 0b101, 0b101, 0b101, 0b111}},
    {'1', {0b010, 0b110, 0b010, 0b010, 0b111}},
    {'2', {0b111, 0b001, 0b111, 0b100, 0b111}},
    {'3', {0b111, 0b001, 0b111, 0b001, 0b111}},
    {'4', {0b101, 0b101, 0b111, 0b001, 0b001}},
    {'5', {0b111, 0b100, 0b111, 0b001, 0b111}},
    {'6', {0b111, 0b100, 0b111, 0b101, 0b111}},
    {'7', {0b111, 0b001, 0b010, 0b010, 0b010}},
    {'8', {0b111, 0b101, 0b111, 0b101, 0b111}},
    {'9', {0b111, 0b101, 0b111, 0b001, 0b111}},
    {'-', {0b000, 0b000, 0b111, 0b000, 0b000}},
    {'+', {0b000, 0b010, 0b111, 0b010, 0b000}},
    {'.', {0b000, 0b000, 0b000, 0b000, 0b010}},
    {'e', {0b000, 0b111, 0b110, 0b100, 0b111}},
};

class Canvas {
 public:
  Canvas(int width, int height) {
    image_.width = width;
    image_.height = height;
    image_.pixels.assign(static_cast<std::size_t>(width) * height * 3,
                         0);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) set(x, y, kBackground);
    }
  }

  void set(int x, int y, Color c) {
    if (x < 0 || y < 0 || x >= image_.width || y >= image_.height) return;
    const std::size_t i =
        (static_cast<std::size_t>(y) * image_.width + x) * 3;
    image_.pixels[i] = c.r;
    image_.pixels[i + 1] = c.g;
    image_.pixels[i + 2] = c.b;
  }

  void line(int x0, int y0, int x1, int y1, Color c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void text(int x, int y, const std::string& s, Color c) {
    for (char ch : s) {
      for (const Glyph& g : kGlyphs) {
        if (g.ch != ch) continue;
        for (int r = 0; r < 5; ++r) {
          for (int col = 0; col < 3; ++col) {
            if (g.rows[r] & (0b100 >> col)) set(x + col, y + r, c);
          }
        }
        break;
      }
      x += 4;
    }
  }

  RgbImage take() { return std::move(image_); }

 private:
  RgbImage image_;
};

std::string format_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

RgbImage render_line_chart(const std::vector<PlotSeries>& series, int width,
                           int height) {
  if (width < 80 || height < 60) {
    throw InputError("chart must be at least 80 x 60 pixels");
  }
  Canvas canvas(width, height);

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool seeded = false;
  for (const PlotSeries& s : series) {
    if (s.x.size() != s.y.size()) {
      throw ShapeError("plot series '" + s.label +
                       "' has mismatched x/y lengths");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!seeded) {
        x_min = x_max = s.x[i];
        y_min = y_max = s.y[i];
        seeded = true;
      } else {
        x_min = std::min(x_min, s.x[i]);
        x_max = std::max(x_max, s.x[i]);
        y_min = std::min(y_min, s.y[i]);
        y_max = std::max(y_max, s.y[i]);
      }
    }
  }
  if (x_max - x_min < 1e-12) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  if (y_max - y_min < 1e-12) {
    y_min -= 0.5;
    y_max += 0.5;
  } else {
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
  }

  const int left = 48, right = width - 12, top = 12, bottom = height - 22;
  const auto px = [&](double x) {
    return left + static_cast<int>(std::lround(
                      (x - x_min) / (x_max - x_min) * (right - left)));
  };
  const auto py = [&](double y) {
    return bottom - static_cast<int>(std::lround(
                        (y - y_min) / (y_max - y_min) * (bottom - top)));
  };

  for (int t = 0; t <= 4; ++t) {
    const double fy = y_min + (y_max - y_min) * t / 4.0;
    const int yy = py(fy);
    canvas.line(left, yy, right, yy, kGrid);
    canvas.text(4, yy - 2, format_tick(fy), kAxis);
    const double fx = x_min + (x_max - x_min) * t / 4.0;
    const int xx = px(fx);
    canvas.line(xx, top, xx, bottom, kGrid);
    canvas.text(xx - 6, bottom + 6, format_tick(fx), kAxis);
  }
  canvas.line(left, top, left, bottom, kAxis);
  canvas.line(left, bottom, right, bottom, kAxis);

  for (std::size_t si = 0; si < series.size(); ++si) {
    const PlotSeries& s = series[si];
    const Color c = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    for (std::size_t i = 1; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i - 1]) || !std::isfinite(s.y[i])) continue;
      canvas.line(px(s.x[i - 1]), py(s.y[i - 1]), px(s.x[i]), py(s.y[i]),
                  c);
    }
    // Series key: a short color swatch in the top-right corner.
    const int ky = top + 4 + static_cast<int>(si) * 7;
    canvas.line(right - 22, ky, right - 8, ky, c);
  }
  return canvas.take();
}

}  // namespace anyface
