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
// On-disk dataset layout:
//
//   <dir>/manifest.json      world seed + dimensions, sample count, vocab
//   <dir>/sample_<id>.tns    latent, image, and caption blocks, concatenated
//   <dir>/sample_<id>.json   attributes + byte offsets of each block
//
// The manifest pins the world seed, so loading reconstructs the identical
// frozen world and verifies its fingerprint.

#ifndef ANYFACE_DATASET_HPP_
#define ANYFACE_DATASET_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "anyface/world.hpp"

namespace anyface {

class Dataset {
 public:
  // Renders `count` paired samples into `dir` (created if needed) and
  // returns the loaded dataset.
  static Dataset generate(const WorldConfig& config, std::int64_t count,
                          const std::string& dir);
  static Dataset load(const std::string& dir);

  const World& world() const { return *world_; }
  std::int64_t size() const {
    return static_cast<std::int64_t>(samples_.size());
  }
  const PairedSample& sample(std::int64_t index) const;
  const std::vector<PairedSample>& samples() const { return samples_; }
  const std::string& dir() const { return dir_; }

 private:
  Dataset() = default;

  std::shared_ptr<const World> world_;
  std::vector<PairedSample> samples_;
  std::string dir_;
};

}  // namespace anyface

#endif  // ANYFACE_DATASET_HPP_
