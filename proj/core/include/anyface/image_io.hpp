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
//
// Binary PPM (P6, 8-bit) image files.  Pixel values map linearly between
// the model's [-1, 1] range and bytes:
//
//   write:  byte = clamp(round((v + 1) * 127.5), 0, 255)
//   read:   v = (byte + 0.5) / 128 - 1
//
// The read mapping centers each byte's quantization bucket, so a write ->
// read -> write round trip is byte-stable and read values stay strictly
// inside (-1, 1) (no saturation at the decoder's asymptotes).

#ifndef ANYFACE_IMAGE_IO_HPP_
#define ANYFACE_IMAGE_IO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "anyface/tensor.hpp"

namespace anyface {

// image must be rank-3 H x W x 3 with finite values; out-of-range values
// saturate at the byte limits.
void write_ppm(const std::string& path, const Tensor& image);

// Reads a P6 PPM with maxval 255 into an H x W x 3 tensor.
Tensor read_ppm(const std::string& path);

// Raw 8-bit RGB raster (row-major, 3 bytes per pixel).
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

void write_ppm_rgb8(const std::string& path, const RgbImage& image);

}  // namespace anyface

#endif  // ANYFACE_IMAGE_IO_HPP_
