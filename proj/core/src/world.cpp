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

#include "anyface/world.hpp"

#include <algorithm>
#include <cmath>

#include "anyface/errors.hpp"
#include "anyface/linalg.hpp"
#include "anyface/tensor_io.hpp"

namespace anyface {

namespace {

constexpr int kMappingHidden = 64;
// Pixels closer than this to +/-1 are inside the atanh blow-up zone.
constexpr double kInvertMargin = 1e-6;

void validate_world_config(const WorldConfig& c) {
  if (c.latent_rows < 1 || c.latent_dim < 1 || c.image_height < 1 ||
      c.image_width < 1 || c.image_channels < 1 || c.noise_dim < 1) {
    throw ConfigError("world: all dimensions must be positive");
  }
  const std::int64_t px = static_cast<std::int64_t>(c.image_height) *
                          c.image_width * c.image_channels;
  if (px < static_cast<std::int64_t>(c.latent_rows) * c.latent_dim) {
    throw ConfigError(
        "world: decoder cannot be injective, latent has more entries than "
        "the image has pixels");
  }
  if (c.average_latent_samples < 1000) {
    throw ConfigError("world: average_latent_samples must be >= 1000");
  }
  if (!(c.attribute_contrast > 0.0) || !std::isfinite(c.attribute_contrast)) {
    throw ConfigError("world: attribute_contrast must be positive");
  }
}

}  // namespace

Tensor empirical_row_mean(int n, int dim,
                          const std::function<std::vector<double>(Rng&)>& row,
                          Rng rng) {
  if (n < 1) throw InputError("empirical_row_mean: need at least one sample");
  std::vector<double> acc(static_cast<std::size_t>(dim), 0.0);
  for (int i = 0; i < n; ++i) {
    std::vector<double> r = row(rng);
    if (static_cast<int>(r.size()) != dim) {
      throw ShapeError("empirical_row_mean: sampler returned wrong width");
    }
    for (int j = 0; j < dim; ++j) acc[static_cast<std::size_t>(j)] += r[j];
  }
  for (auto& x : acc) x /= static_cast<double>(n);
  return Tensor::from_data({1, dim}, std::move(acc));
}

World::World(const WorldConfig& config) : config_(config) {
  validate_world_config(config_);
  const int L = config_.latent_rows;
  const int d = config_.latent_dim;
  const int dz = config_.noise_dim;
  const std::int64_t ld = static_cast<std::int64_t>(L) * d;
  const std::int64_t px = pixels();

  // Mapping network: two tanh layers with nonzero biases, so style rows
  // have a nonzero mean and the average latent is a meaningful anchor.
  {
    Rng r(substream(config_.seed, "world.mapping"));
    map_w1_ = Tensor::randn({dz, kMappingHidden}, r, 1.0 / std::sqrt(dz));
    map_b1_ = Tensor::randn({1, kMappingHidden}, r, 0.3);
    map_w2_ = Tensor::randn({kMappingHidden, d}, r,
                            1.0 / std::sqrt(kMappingHidden));
    map_b2_ = Tensor::randn({1, d}, r, 0.3);
  }

  // Attribute lift: each attribute flips a fixed random direction across
  // every latent row; summed magnitude per entry ~ attribute_scale.
  {
    Rng r(substream(config_.seed, "world.attributes"));
    attr_lift_ = Tensor::randn(
        {kNumAttributes, ld}, r,
        config_.attribute_scale / std::sqrt(double(kNumAttributes)));
  }

  // Decoder weights; regenerate until the latent -> pre-activation map has
  // full column rank (random Gaussians almost surely do on the first try).
  // The raw Gaussian matrix is then boosted along the (orthonormalised)
  // attribute directions by attribute_contrast: I + (c - 1) U U^T is
  // positive definite for c > 0, so the boost preserves full rank.
  for (int attempt = 0;; ++attempt) {
    if (attempt > 32) {
      throw NumericError("world: could not build a full-rank decoder");
    }
    Rng r(substream(config_.seed, "world.decoder", attempt));
    dec_a_ = Tensor::randn({ld, px}, r, 1.0 / std::sqrt(double(ld)));
    if (has_full_column_rank(transpose(dec_a_))) {
      reseed_attempts_ = attempt;
      break;
    }
  }
  {
    // Modified Gram-Schmidt over the flattened attribute directions.
    std::vector<std::vector<double>> basis;
    for (int k = 0; k < kNumAttributes; ++k) {
      std::vector<double> u(attr_lift_.data().begin() + k * ld,
                            attr_lift_.data().begin() + (k + 1) * ld);
      for (const auto& q : basis) {
        double dot = 0.0;
        for (int i = 0; i < ld; ++i) dot += u[i] * q[i];
        for (int i = 0; i < ld; ++i) u[i] -= dot * q[i];
      }
      double norm = 0.0;
      for (double x : u) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < 1e-9) continue;  // degenerate draw; skip the direction
      for (auto& x : u) x /= norm;
      basis.push_back(std::move(u));
    }
    auto& a = dec_a_.mutable_data();
    for (const auto& q : basis) {
      // a += (contrast - 1) * q (q^T a), one projected row at a time.
      std::vector<double> qa(static_cast<std::size_t>(px), 0.0);
      for (int i = 0; i < ld; ++i) {
        const double qi = q[static_cast<std::size_t>(i)];
        if (qi == 0.0) continue;
        for (int j = 0; j < px; ++j) qa[j] += qi * a[i * px + j];
      }
      const double boost = config_.attribute_contrast - 1.0;
      for (int i = 0; i < ld; ++i) {
        const double s = boost * q[static_cast<std::size_t>(i)];
        if (s == 0.0) continue;
        for (int j = 0; j < px; ++j) a[i * px + j] += s * qa[j];
      }
    }
  }

  // Calibrate the decoder against the empirical pre-activation magnitude
  // at true latents so that pre-activations have std ~ decoder_gain.
  {
    Rng r(substream(config_.seed, "world.calibration"));
    const int kCalibration = 256;
    double mean_sq = 0.0;
    for (int s = 0; s < kCalibration; ++s) {
      std::vector<int> a(kNumAttributes);
      for (auto& v : a) v = r.bernoulli(0.5) ? 1 : 0;
      Tensor z = sample_noise(r);
      Tensor w = add(attribute_latent(a), mapping_network(z, L));
      Tensor pre = matmul(reshape(w, {1, ld}), dec_a_);
      for (double x : pre.data()) mean_sq += x * x;
    }
    mean_sq /= static_cast<double>(kCalibration) * static_cast<double>(px);
    const double rescale = config_.decoder_gain / std::sqrt(mean_sq);
    for (auto& x : dec_a_.mutable_data()) x *= rescale;
  }
  {
    // Saturated canvas: fixed magnitude, seeded sign per pixel.  Keeping
    // the magnitude exact (rather than Gaussian) bounds pre-activations
    // away from the atanh singularity that inversion must avoid.
    Rng r(substream(config_.seed, "world.bias"));
    std::vector<double> b(static_cast<std::size_t>(px));
    for (auto& v : b) {
      v = r.bernoulli(0.5) ? config_.decoder_bias_level
                           : -config_.decoder_bias_level;
    }
    dec_b_ = Tensor::from_data({1, px}, std::move(b));
  }
  pinv_t_ = transpose(least_squares_pinv(transpose(dec_a_))).detach();

  average_latent_ = average_latent(config_.average_latent_samples);
}

Tensor World::style_row(const Tensor& z) const {
  if (z.rank() != 2 || z.shape()[0] != 1 ||
      z.shape()[1] != config_.noise_dim) {
    throw ShapeError("mapping_network: noise must be 1 x noise_dim");
  }
  Tensor h = tanh_t(add(matmul(z, map_w1_), map_b1_));
  Tensor row = tanh_t(add(matmul(h, map_w2_), map_b2_));
  return mul_scalar(row, config_.style_scale);
}

Tensor World::mapping_network(const Tensor& z, int rows) const {
  if (rows < 1 || rows > config_.latent_rows) {
    throw ShapeError("mapping_network: rows must be in [1, " +
                     std::to_string(config_.latent_rows) + "], got " +
                     std::to_string(rows));
  }
  Tensor row = style_row(z);
  std::vector<Tensor> tiled(static_cast<std::size_t>(rows), row);
  return rows == 1 ? row : stack_rows(tiled);
}

Tensor World::sample_noise(Rng& rng) const {
  return Tensor::randn({1, config_.noise_dim}, rng);
}

Tensor World::style_from_seed(std::uint64_t style_seed, int rows) const {
  Rng r(substream(style_seed, "style.noise"));
  Tensor z = Tensor::randn({1, config_.noise_dim}, r);
  return mapping_network(z, rows);
}

Tensor World::average_latent(int samples) const {
  if (samples < 1000) {
    throw InputError("average_latent: need at least 1000 samples");
  }
  const int d = config_.latent_dim;
  auto sampler = [this](Rng& r) {
    Tensor z = Tensor::randn({1, config_.noise_dim}, r);
    return style_row(z).data();
  };
  Tensor mean_row = empirical_row_mean(
      samples, d, sampler, Rng(substream(config_.seed, "world.average")));
  std::vector<Tensor> tiled(static_cast<std::size_t>(config_.latent_rows),
                            mean_row);
  return stack_rows(tiled).detach();
}

Tensor World::decode_preactivation(const Tensor& w) const {
  if (w.rank() != 2 || w.shape()[0] != config_.latent_rows ||
      w.shape()[1] != config_.latent_dim) {
    throw ShapeError("decode: latent must be L x d");
  }
  Tensor v = reshape(w, {1, static_cast<std::int64_t>(config_.latent_rows) *
                                config_.latent_dim});
  return add(matmul(v, dec_a_), dec_b_);
}

Tensor World::decode(const Tensor& w) const {
  Tensor img = tanh_t(decode_preactivation(w));
  return reshape(img, {config_.image_height, config_.image_width,
                       config_.image_channels});
}

Tensor World::invert(const Tensor& image) const {
  if (image.rank() != 3 || image.shape()[0] != config_.image_height ||
      image.shape()[1] != config_.image_width ||
      image.shape()[2] != config_.image_channels) {
    throw ShapeError("invert: image must be H x W x C");
  }
  const auto& p = image.data();
  std::vector<double> x(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double v = p[i];
    if (!std::isfinite(v) || std::abs(v) > 1.0) {
      throw InversionDomainError(
          "invert: pixel " + std::to_string(i) +
          " outside [-1, 1]; not a decoder output");
    }
    if (std::abs(v) >= 1.0 - kInvertMargin) {
      throw InversionRangeError("invert: pixel " + std::to_string(i) +
                                " at the atanh singularity");
    }
    x[i] = std::atanh(v) - dec_b_.data()[i];
  }
  const std::int64_t n = static_cast<std::int64_t>(x.size());
  Tensor xt = Tensor::from_data({1, n}, std::move(x));
  Tensor w = matmul(xt, pinv_t_);
  return reshape(w, {config_.latent_rows, config_.latent_dim}).detach();
}

Tensor World::attribute_latent(const std::vector<int>& attributes) const {
  if (static_cast<int>(attributes.size()) != kNumAttributes) {
    throw ShapeError("attribute_latent: expected " +
                     std::to_string(kNumAttributes) + " attributes");
  }
  std::vector<double> signs(kNumAttributes);
  for (int i = 0; i < kNumAttributes; ++i) {
    if (attributes[i] != 0 && attributes[i] != 1) {
      throw InputError("attribute_latent: attributes must be 0/1");
    }
    signs[static_cast<std::size_t>(i)] = attributes[i] ? 1.0 : -1.0;
  }
  Tensor s = Tensor::from_data({1, kNumAttributes}, std::move(signs));
  return reshape(matmul(s, attr_lift_),
                 {config_.latent_rows, config_.latent_dim});
}

PairedSample World::sample_paired(std::uint64_t dataset_seed,
                                  std::int64_t id) const {
  if (id < 0) throw InputError("sample_paired: id must be non-negative");
  PairedSample out;
  out.id = id;
  Rng r(substream(dataset_seed, "sample",
                  static_cast<std::uint64_t>(id)));
  out.attributes.resize(kNumAttributes);
  for (auto& a : out.attributes) a = r.bernoulli(0.5) ? 1 : 0;
  Tensor z = sample_noise(r);
  out.latent =
      add(attribute_latent(out.attributes),
          mapping_network(z, config_.latent_rows))
          .detach();
  out.image = decode(out.latent).detach();
  out.captions.reserve(kCaptionsPerSample);
  for (int j = 0; j < kCaptionsPerSample; ++j) {
    out.captions.push_back(caption_from_attributes(
        out.attributes,
        substream(dataset_seed, "caption", static_cast<std::uint64_t>(id),
                  static_cast<std::uint64_t>(j))));
  }
  return out;
}

Caption World::caption_from_attributes(const std::vector<int>& attributes,
                                       std::uint64_t subset_seed) const {
  if (static_cast<int>(attributes.size()) != kNumAttributes) {
    throw ShapeError("caption_from_attributes: expected " +
                     std::to_string(kNumAttributes) + " attributes");
  }
  Rng r(mix64(subset_seed));
  const int span = kCaptionMaxAttributes - kCaptionMinAttributes + 1;
  const int count =
      kCaptionMinAttributes + static_cast<int>(r.uniform_index(span));

  // Partial Fisher-Yates draw of `count` distinct attributes.
  std::vector<int> idx(kNumAttributes);
  for (int i = 0; i < kNumAttributes; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < count; ++i) {
    const auto j =
        i + static_cast<int>(r.uniform_index(kNumAttributes - i));
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[static_cast<std::size_t>(j)]);
  }

  Caption caption;
  caption.tokens.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int attr = idx[static_cast<std::size_t>(i)];
    const int synonym = static_cast<int>(r.uniform_index(2));
    caption.tokens.push_back(
        make_token(attr, attributes[static_cast<std::size_t>(attr)] == 1,
                   synonym));
  }
  // Word order is part of the caption's surface form.
  for (int i = count - 1; i > 0; --i) {
    const auto j = static_cast<int>(r.uniform_index(i + 1));
    std::swap(caption.tokens[static_cast<std::size_t>(i)],
              caption.tokens[static_cast<std::size_t>(j)]);
  }
  return caption;
}

std::vector<Tensor> World::frozen_tensors() const {
  return {map_w1_, map_b1_, map_w2_, map_b2_, attr_lift_, dec_a_, dec_b_};
}

std::uint64_t World::fingerprint() const {
  return tensors_fingerprint(frozen_tensors());
}

}  // namespace anyface
