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
// Cross-modal distillation module: a small pre-norm transformer encoder
// over the input feature rows, closed by a final layer norm, mean-pooled
// into a hidden summary h, then a three-layer head mapping h to a full
// latent matrix.  Two instances (one per stream) expose h for distillation
// between streams.  The closing norm keeps h at unit channel scale, so the
// inter-stream KL term can only be satisfied by aligning channel patterns
// -- never by shrinking the residual stream toward a uniform softmax --
// and the head reads the same normalized summary the peer stream sees.

#ifndef ANYFACE_CMD_HPP_
#define ANYFACE_CMD_HPP_

#include <cstdint>
#include <vector>

#include "anyface/tensor.hpp"

namespace anyface {

struct CmdConfig {
  int embed_dim = 32;    // feature width d_e
  int layers = 3;        // transformer depth
  int latent_rows = 8;   // L
  int latent_dim = 32;   // d
  int ff_multiplier = 4; // transformer feed-forward width / embed_dim
  int head_hidden1 = 96;
  int head_hidden2 = 192;
  // Per-entry bound on the head's offset from its anchor latent.  The
  // head emits anchor + bound * tanh(raw), which keeps predictions inside
  // the populated region of latent space: cosine-ratio objectives cannot
  // run off toward their degenerate denominator region, and decoded
  // pre-activations stay in the invertible range.
  double head_offset_bound = 1.4;
};

struct CmdOutput {
  Tensor latent;  // L x d
  Tensor hidden;  // 1 x embed_dim pooled summary (pre-head)
};

class CmdModule {
 public:
  CmdModule() = default;
  // Identical (config, seed) pairs initialize bit-identically.
  CmdModule(const CmdConfig& config, std::uint64_t seed);

  // features: n x embed_dim, one row per conditioning vector (n >= 1).
  CmdOutput forward(const Tensor& features) const;

  // Sets the anchor latent (L x d) that offsets are predicted against, so
  // an untrained module already emits approximately that latent.  Useful
  // for anchoring early training at the population average.  The anchor is
  // not a trained parameter and is not serialized; owners re-derive it
  // from the world before loading parameters.
  void set_output_anchor(const Tensor& latent);

  std::vector<Tensor> parameters() const;
  const CmdConfig& config() const { return config_; }

 private:
  struct Layer {
    Tensor ln1_g, ln1_b, ln2_g, ln2_b;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ff_w1, ff_b1, ff_w2, ff_b2;
  };

  Tensor attention(const Layer& layer, const Tensor& x) const;

  CmdConfig config_;
  std::vector<Layer> layers_;
  Tensor final_g_, final_b_;
  Tensor head_w1_, head_b1_, head_w2_, head_b2_, head_w3_, head_b3_;
  Tensor anchor_;  // L x d constant, see set_output_anchor
};

// Row-composed latent: the first n rows come from w_c (n x d), the final m
// rows from the tail of w_t (L x d); m + n must equal L.  With n = 0 the
// result is w_t itself; with m = 0 it is w_c.
Tensor compose_latent(const Tensor& w_t, const Tensor& w_c, int m, int n);

}  // namespace anyface

#endif  // ANYFACE_CMD_HPP_
