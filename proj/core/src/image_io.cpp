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

#include "anyface/image_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "anyface/errors.hpp"

namespace anyface {
namespace {

std::uint8_t to_byte(double v) {
  if (!std::isfinite(v)) {
    throw NumericError("image value is not finite");
  }
  const double scaled = std::round((v + 1.0) * 127.5);
  if (scaled <= 0.0) return 0;
  if (scaled >= 255.0) return 255;
  return static_cast<std::uint8_t>(scaled);
}

// Skips whitespace and '#' comments between PPM header fields.
void skip_separators(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace

void write_ppm(const std::string& path, const Tensor& image) {
  if (image.rank() != 3 || image.shape()[2] != 3) {
    throw ShapeError("PPM output needs an H x W x 3 image");
  }
  const std::int64_t h = image.shape()[0];
  const std::int64_t w = image.shape()[1];

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write image: " + path);
  out << "P6\n" << w << " " << h << "\n255\n";
  std::vector<char> bytes(static_cast<std::size_t>(h * w * 3));
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<char>(to_byte(image.data()[i]));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed while writing image: " + path);
}

Tensor read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("image not found: " + path);

  std::string magic;
  in >> magic;
  if (magic != "P6") {
    throw InputError("unsupported image format '" + magic +
                     "' (expected binary PPM)");
  }
  skip_separators(in);
  std::int64_t w = 0, h = 0, maxval = 0;
  in >> w;
  skip_separators(in);
  in >> h;
  skip_separators(in);
  in >> maxval;
  if (!in || w <= 0 || h <= 0) {
    throw InputError("malformed PPM header in " + path);
  }
  if (maxval != 255) {
    throw InputError("unsupported PPM maxval " + std::to_string(maxval) +
                     " in " + path);
  }
  in.get();  // single whitespace byte after maxval

  std::vector<char> bytes(static_cast<std::size_t>(w * h * 3));
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw InputError("truncated PPM payload in " + path);
  }

  std::vector<double> values(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const auto b = static_cast<std::uint8_t>(bytes[i]);
    values[i] = (static_cast<double>(b) + 0.5) / 128.0 - 1.0;
  }
  return Tensor::from_data({h, w, 3}, std::move(values));
}

void write_ppm_rgb8(const std::string& path, const RgbImage& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() !=
          static_cast<std::size_t>(image.width) * image.height * 3) {
    throw ShapeError("RGB raster dimensions do not match its pixel buffer");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write image: " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw InputError("failed while writing image: " + path);
}

}  // namespace anyface
