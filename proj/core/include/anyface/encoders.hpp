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
// Paired text/image encoders mapping both modalities into one embedding
// space, pretrained contrastively and frozen afterwards.  The text encoder
// pools token embeddings as a bag of words (token ids are sorted before
// pooling, so any reordering of the same tokens embeds identically) and
// projects through a two-layer MLP; the image encoder flattens pixels and
// projects the same way.

#ifndef ANYFACE_ENCODERS_HPP_
#define ANYFACE_ENCODERS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "anyface/dataset.hpp"
#include "anyface/tensor.hpp"
#include "anyface/world.hpp"

namespace anyface {

struct EncoderConfig {
  std::uint64_t seed = 11;
  int embed_dim = 32;        // shared embedding width d_e
  int token_dim = 32;        // per-token embedding width
  int text_hidden = 64;
  int image_hidden = 128;
  double temperature = 0.07;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 80;
  // Held-out pairs reserved from the tail of the dataset for retrieval.
  int holdout_pairs = 200;
  // Retrieval is scored within disjoint galleries of this size; chance
  // level is 1/gallery.
  int retrieval_gallery = 4;
  double target_accuracy = 0.90;
  // Once the target is met, training continues while the held-out score
  // keeps improving; it stops after this many stale epochs (the best
  // weights seen are the ones kept) or as soon as stop_accuracy is hit.
  int patience = 6;
  double stop_accuracy = 0.97;
};

class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(int token_dim, int hidden, int embed_dim, std::uint64_t seed);

  // Mean token embedding of a caption -> 1 x token_dim.
  Tensor pool(const Caption& caption) const;
  // MLP from pooled rows (n x token_dim) -> n x embed_dim.
  Tensor project(const Tensor& pooled) const;
  Tensor encode(const Caption& caption) const;  // 1 x embed_dim

  std::vector<Tensor> parameters() const;
  int embed_dim() const { return embed_dim_; }

 private:
  friend class EncoderPair;
  int token_dim_ = 0;
  int hidden_ = 0;
  int embed_dim_ = 0;
  Tensor token_table_;  // vocab x token_dim
  Tensor w1_, b1_, w2_, b2_;
};

class ImageEncoder {
 public:
  ImageEncoder() = default;
  ImageEncoder(int input_dim, int hidden, int embed_dim, std::uint64_t seed);

  // MLP from flattened images (n x input_dim) -> n x embed_dim.
  Tensor project(const Tensor& flat) const;
  Tensor encode(const Tensor& image) const;  // 1 x embed_dim

  std::vector<Tensor> parameters() const;
  int input_dim() const { return input_dim_; }
  int embed_dim() const { return embed_dim_; }

 private:
  friend class EncoderPair;
  int input_dim_ = 0;
  int hidden_ = 0;
  int embed_dim_ = 0;
  Tensor w1_, b1_, w2_, b2_;
};

class EncoderPair {
 public:
  EncoderPair() = default;
  EncoderPair(const EncoderConfig& config, const World& world);

  const TextEncoder& text() const { return text_; }
  const ImageEncoder& image() const { return image_; }
  const EncoderConfig& config() const { return config_; }
  double holdout_accuracy() const { return holdout_accuracy_; }
  bool frozen() const { return frozen_; }
  std::vector<Tensor> parameters() const;
  std::uint64_t fingerprint() const;

  // Contrastive pretraining over `data` until held-out retrieval reaches
  // config.target_accuracy; marks all weights frozen on success and throws
  // PretrainError (with the best accuracy) if max_epochs is exhausted.
  void pretrain(const Dataset& data);

  // Fraction of held-out pairs whose caption ranks its own image first
  // within a gallery of `config.retrieval_gallery` candidates.
  double holdout_retrieval(const Dataset& data) const;

  // Checkpoint: weights in a TNS block file plus a JSON sidecar holding the
  // architecture, protocol, and measured accuracy.
  void save(const std::string& tns_path) const;
  static EncoderPair load(const std::string& tns_path);

  // Marks every weight immutable.  pretrain() calls this on success; it is
  // public so deliberately constructed encoder pairs can be frozen too.
  void freeze();

 private:
  EncoderConfig config_;
  TextEncoder text_;
  ImageEncoder image_;
  double holdout_accuracy_ = 0.0;
  bool frozen_ = false;
};

// Symmetric InfoNCE over row-aligned batches (text n x d, image n x d):
// mean cross entropy of matching the diagonal in both directions at the
// given temperature.
Tensor clip_batch_loss(const Tensor& text_embeds, const Tensor& image_embeds,
                       double temperature);

}  // namespace anyface

#endif  // ANYFACE_ENCODERS_HPP_
