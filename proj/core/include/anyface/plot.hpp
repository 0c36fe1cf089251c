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

#ifndef ANYFACE_PLOT_HPP_
#define ANYFACE_PLOT_HPP_

#include <string>
#include <vector>

#include "anyface/image_io.hpp"

namespace anyface {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Deterministic line chart: white background, axes with tick marks, one
// fixed palette color per series, numeric range labels drawn with a small
// built-in digit font.
RgbImage render_line_chart(const std::vector<PlotSeries>& series, int width,
                           int height);

}  // namespace anyface

#endif  // ANYFACE_PLOT_HPP_
