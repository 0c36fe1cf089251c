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

#include "anyface/cmd.hpp"

#include <cmath>
#include <string>

#include "anyface/errors.hpp"
#include "anyface/rng.hpp"

namespace anyface {
namespace {

void validate_config(const CmdConfig& c) {
  if (c.embed_dim < 1 || c.latent_rows < 1 || c.latent_dim < 1) {
    throw ConfigError("distillation module dimensions must be positive");
  }
  if (c.layers < 1) {
    throw ConfigError("distillation module needs at least one transformer "
                      "layer");
  }
  if (c.ff_multiplier < 1 || c.head_hidden1 < 1 || c.head_hidden2 < 1) {
    throw ConfigError("distillation module hidden widths must be positive");
  }
  if (!(c.head_offset_bound > 0.0) ||
      !std::isfinite(c.head_offset_bound)) {
    throw ConfigError("head offset bound must be positive and finite");
  }
}

}  // namespace

CmdModule::CmdModule(const CmdConfig& config, std::uint64_t seed)
    : config_(config) {
  validate_config(config);
  Rng rng(substream(seed, "cmd.init"));
  const int d = config.embed_dim;
  const int ff = config.ff_multiplier * d;
  const double attn_std = 1.0 / std::sqrt(static_cast<double>(d));
  const double ff_std = 1.0 / std::sqrt(static_cast<double>(ff));

  layers_.reserve(static_cast<std::size_t>(config.layers));
  for (int l = 0; l < config.layers; ++l) {
    Layer layer;
    layer.ln1_g = Tensor::constant({1, d}, 1.0, true);
    layer.ln1_b = Tensor::zeros({1, d}, true);
    layer.ln2_g = Tensor::constant({1, d}, 1.0, true);
    layer.ln2_b = Tensor::zeros({1, d}, true);
    layer.wq = Tensor::randn({d, d}, rng, attn_std, true);
    layer.bq = Tensor::zeros({1, d}, true);
    layer.wk = Tensor::randn({d, d}, rng, attn_std, true);
    layer.bk = Tensor::zeros({1, d}, true);
    layer.wv = Tensor::randn({d, d}, rng, attn_std, true);
    layer.bv = Tensor::zeros({1, d}, true);
    layer.wo = Tensor::randn({d, d}, rng, attn_std, true);
    layer.bo = Tensor::zeros({1, d}, true);
    layer.ff_w1 = Tensor::randn({d, ff}, rng, attn_std, true);
    layer.ff_b1 = Tensor::zeros({1, ff}, true);
    layer.ff_w2 = Tensor::randn({ff, d}, rng, ff_std, true);
    layer.ff_b2 = Tensor::zeros({1, d}, true);
    layers_.push_back(std::move(layer));
  }
  final_g_ = Tensor::constant({1, d}, 1.0, true);
  final_b_ = Tensor::zeros({1, d}, true);

  const int h1 = config.head_hidden1;
  const int h2 = config.head_hidden2;
  const int out = config.latent_rows * config.latent_dim;
  head_w1_ = Tensor::randn({d, h1}, rng,
                           1.0 / std::sqrt(static_cast<double>(d)), true);
  head_b1_ = Tensor::zeros({1, h1}, true);
  head_w2_ = Tensor::randn({h1, h2}, rng,
                           1.0 / std::sqrt(static_cast<double>(h1)), true);
  head_b2_ = Tensor::zeros({1, h2}, true);
  // Small final weights keep the untrained output close to the anchor.
  head_w3_ = Tensor::randn({h2, out}, rng,
                           0.02 / std::sqrt(static_cast<double>(h2)), true);
  head_b3_ = Tensor::zeros({1, out}, true);
  anchor_ = Tensor::zeros({config.latent_rows, config.latent_dim});
}

Tensor CmdModule::attention(const Layer& layer, const Tensor& x) const {
  Tensor q = add_rowwise(matmul(x, layer.wq), layer.bq);
  Tensor k = add_rowwise(matmul(x, layer.wk), layer.bk);
  Tensor v = add_rowwise(matmul(x, layer.wv), layer.bv);
  const double scale =
      1.0 / std::sqrt(static_cast<double>(config_.embed_dim));
  Tensor weights = softmax(mul_scalar(matmul(q, transpose(k)), scale));
  Tensor mixed = matmul(weights, v);
  return add_rowwise(matmul(mixed, layer.wo), layer.bo);
}

CmdOutput CmdModule::forward(const Tensor& features) const {
  if (layers_.empty()) throw InputError("forward on an empty module");
  if (features.rank() != 2 || features.cols() != config_.embed_dim) {
    throw ShapeError("features must be n x " +
                     std::to_string(config_.embed_dim));
  }
  Tensor x = features;
  for (const Layer& layer : layers_) {
    Tensor attended =
        add(x, attention(layer, layer_norm(x, layer.ln1_g, layer.ln1_b)));
    Tensor normed = layer_norm(attended, layer.ln2_g, layer.ln2_b);
    Tensor ff = add_rowwise(
        matmul(tanh_t(add_rowwise(matmul(normed, layer.ff_w1), layer.ff_b1)),
               layer.ff_w2),
        layer.ff_b2);
    x = add(attended, ff);
  }
  Tensor hidden = mean_rows(layer_norm(x, final_g_, final_b_));
  Tensor a1 = tanh_t(add_rowwise(matmul(hidden, head_w1_), head_b1_));
  Tensor a2 = tanh_t(add_rowwise(matmul(a1, head_w2_), head_b2_));
  Tensor flat = add_rowwise(matmul(a2, head_w3_), head_b3_);
  Tensor offsets = mul_scalar(tanh_t(flat), config_.head_offset_bound);
  CmdOutput out;
  out.hidden = hidden;
  out.latent = add(
      anchor_,
      reshape(offsets, {config_.latent_rows, config_.latent_dim}));
  return out;
}

void CmdModule::set_output_anchor(const Tensor& latent) {
  if (layers_.empty()) throw InputError("anchor on an empty module");
  if (latent.rank() != 2 || latent.rows() != config_.latent_rows ||
      latent.cols() != config_.latent_dim) {
    throw ShapeError("anchor latent must be " +
                     std::to_string(config_.latent_rows) + " x " +
                     std::to_string(config_.latent_dim));
  }
  anchor_ = latent.detach();
}

std::vector<Tensor> CmdModule::parameters() const {
  std::vector<Tensor> out;
  for (const Layer& l : layers_) {
    for (const Tensor& t :
         {l.ln1_g, l.ln1_b, l.ln2_g, l.ln2_b, l.wq, l.bq, l.wk, l.bk, l.wv,
          l.bv, l.wo, l.bo, l.ff_w1, l.ff_b1, l.ff_w2, l.ff_b2}) {
      out.push_back(t);
    }
  }
  for (const Tensor& t : {final_g_, final_b_, head_w1_, head_b1_, head_w2_,
                          head_b2_, head_w3_, head_b3_}) {
    out.push_back(t);
  }
  return out;
}

Tensor compose_latent(const Tensor& w_t, const Tensor& w_c, int m, int n) {
  if (w_t.rank() != 2) {
    throw ShapeError("compose_latent: w_t must be rank 2");
  }
  const auto rows = w_t.rows();
  if (m < 0 || n < 0 || m + n != rows) {
    throw ShapeError("compose_latent: m + n must equal the latent row count "
                     + std::to_string(rows) + ", got m=" + std::to_string(m) +
                     " n=" + std::to_string(n));
  }
  if (n == 0) return w_t;
  if (w_c.rank() != 2 || w_c.rows() != n || w_c.cols() != w_t.cols()) {
    throw ShapeError("compose_latent: w_c must be " + std::to_string(n) +
                     " x " + std::to_string(w_t.cols()));
  }
  if (m == 0) return w_c;
  return concat_rows(w_c, rows_slice(w_t, rows - m, rows));
}

}  // namespace anyface
