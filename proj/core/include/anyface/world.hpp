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
// The synthetic face world: a frozen affine-then-tanh decoder from latent
// codes (L x d matrices) to small RGB images, a frozen mapping network that
// turns Gaussian noise into style rows, attribute-driven latents, and
// caption generation over the shared vocabulary.  Everything is a pure
// function of one 64-bit seed; the world is immutable after construction
// and safe for concurrent reads.
//
// Latent layout: a true latent w* is
//
//   w* = attribute_latent(a) + tile(style_row(z))
//
// so every row carries attribute signal while the style row is shared
// across rows (the mapping network emits a single 1 x d style vector).
// The decoder's pre-activation map has full column rank by construction
// (the constructor re-seeds the decoder until that holds), which makes
// images exactly invertible back to latents via least squares + atanh.

#ifndef ANYFACE_WORLD_HPP_
#define ANYFACE_WORLD_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "anyface/rng.hpp"
#include "anyface/tensor.hpp"
#include "anyface/vocab.hpp"

namespace anyface {

inline constexpr int kCaptionsPerSample = 10;
inline constexpr int kCaptionMinAttributes = 3;
inline constexpr int kCaptionMaxAttributes = 8;

struct WorldConfig {
  std::uint64_t seed = 7;
  int latent_rows = 8;   // L
  int latent_dim = 32;   // d
  int image_height = 16;
  int image_width = 16;
  int image_channels = 3;
  int noise_dim = 16;  // mapping network input
  // Monte-Carlo sample count behind the cached average latent.
  int average_latent_samples = 10000;
  // Per-entry magnitude of the attribute contribution to a latent.
  double attribute_scale = 0.6;
  // Multiplier on the mapping network's style row.
  double style_scale = 1.4;
  // Target pre-activation standard deviation of the latent contribution;
  // the decoder weights are calibrated against the empirical pre-activation
  // magnitude at true latents so this holds regardless of the scales above.
  double decoder_gain = 0.95;
  // Extra decoder response along the attribute directions, mirroring how
  // categorical face edits (hair colour, glasses) repaint large regions
  // while style variation is subtler.  Latents concentrated in the
  // attribute subspace therefore drive pixels deeper into saturation than
  // latents of equal norm spread across all directions.
  double attribute_contrast = 2.0;
  // Every pixel's bias sits at exactly +/- this value (random sign), deep
  // in tanh's saturated range.  The zero latent therefore decodes to a
  // high-contrast, nearly flat canvas; latent contributions pull pixels
  // back through the responsive mid-range.  Local sensitivity to the
  // style rows thus grows with how far a latent sits from the average --
  // near-average latents render stiff, saturated images.
  double decoder_bias_level = 1.8;
};

struct Caption {
  std::vector<int> tokens;
};

struct PairedSample {
  std::int64_t id = -1;
  std::vector<int> attributes;       // kNumAttributes entries of 0/1
  Tensor latent;                     // L x d true latent
  Tensor image;                      // H x W x C, equals decode(latent)
  std::vector<Caption> captions;     // kCaptionsPerSample entries
};

// Monte-Carlo mean of n sampled rows -> 1 x dim.  Exposed so the averaging
// machinery can be validated with a trivial sampler.
Tensor empirical_row_mean(int n, int dim,
                          const std::function<std::vector<double>(Rng&)>& row,
                          Rng rng);

class World {
 public:
  explicit World(const WorldConfig& config);

  const WorldConfig& config() const { return config_; }
  int latent_rows() const { return config_.latent_rows; }
  int latent_dim() const { return config_.latent_dim; }
  int pixels() const {
    return config_.image_height * config_.image_width *
           config_.image_channels;
  }

  // Style rows from noise z (1 x noise_dim), tiled to `rows` rows.
  // rows must be in [1, L].
  Tensor mapping_network(const Tensor& z, int rows) const;
  // Fresh noise draw (1 x noise_dim).
  Tensor sample_noise(Rng& rng) const;
  // Deterministic style block for a named seed.
  Tensor style_from_seed(std::uint64_t style_seed, int rows) const;

  // Row-wise empirical mean of mapping-network outputs over `samples`
  // draws, tiled to L x d.  samples must be >= 1000.
  Tensor average_latent(int samples) const;
  // Cached default (config().average_latent_samples draws).
  const Tensor& average_latent() const { return average_latent_; }

  // Differentiable decoder: latent (L x d) -> image (H x W x C) in (-1, 1).
  Tensor decode(const Tensor& w) const;
  // The affine part before tanh (1 x H*W*C); decode == tanh(preactivation).
  Tensor decode_preactivation(const Tensor& w) const;

  // Exact latent recovery for decoder outputs: atanh + least squares.
  // Pixels beyond [-1, 1] raise InversionDomainError; pixels within 1e-6
  // of +/-1 raise InversionRangeError (atanh singularity).
  Tensor invert(const Tensor& image) const;

  // Attribute contribution to a latent (L x d); attributes are 0/1.
  Tensor attribute_latent(const std::vector<int>& attributes) const;

  // Deterministic paired record for (dataset_seed, id): attributes, true
  // latent, rendered image, and kCaptionsPerSample captions.
  PairedSample sample_paired(std::uint64_t dataset_seed,
                             std::int64_t id) const;

  // A caption mentioning a random subset of 3..8 attributes of `a`, with
  // synonym and word-order choices drawn from subset_seed.
  Caption caption_from_attributes(const std::vector<int>& attributes,
                                  std::uint64_t subset_seed) const;

  // Frozen-component identity (decoder + mapping network + attribute lift).
  std::vector<Tensor> frozen_tensors() const;
  std::uint64_t fingerprint() const;
  // Decoder regenerations needed to reach full column rank (usually 0).
  int reseed_attempts() const { return reseed_attempts_; }

 private:
  Tensor style_row(const Tensor& z) const;  // 1 x d

  WorldConfig config_;
  // Mapping network (two tanh layers).
  Tensor map_w1_, map_b1_, map_w2_, map_b2_;
  // Attribute lift: kNumAttributes x (L*d).
  Tensor attr_lift_;
  // Decoder: pre = vec(w) * dec_a_ + dec_b_; dec_a_ is (L*d) x pixels.
  Tensor dec_a_, dec_b_;
  // Pseudo-inverse of the decoder map, transposed: pixels x (L*d).
  Tensor pinv_t_;
  Tensor average_latent_;  // L x d
  int reseed_attempts_ = 0;
};

}  // namespace anyface

#endif  // ANYFACE_WORLD_HPP_
