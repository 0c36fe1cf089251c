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

#ifndef ANYFACE_OPTIMIZER_HPP_
#define ANYFACE_OPTIMIZER_HPP_

#include <cstdint>
#include <vector>

#include "anyface/tensor.hpp"

namespace anyface {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moment buffers are owned here, keyed by the
// position of each parameter in the list handed to the constructor.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Tensor> parameters, const AdamConfig& config);

  void zero_grad();
  // Applies one update from the gradients currently on the parameters.
  void step();
  std::int64_t steps_taken() const { return t_; }

  // Moment buffers concatenated in parameter order, for checkpointing.
  std::vector<double> flattened_m() const;
  std::vector<double> flattened_v() const;
  void restore(const std::vector<double>& m, const std::vector<double>& v,
               std::int64_t t);

 private:
  std::vector<Tensor> parameters_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamConfig config_;
  std::int64_t t_ = 0;
};

}  // namespace anyface

#endif  // ANYFACE_OPTIMIZER_HPP_
