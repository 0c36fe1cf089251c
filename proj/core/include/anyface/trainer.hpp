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
// Alternating two-stream training: a reconstruction stream (image ->
// latent -> image) and a synthesis stream (caption -> latent -> image),
// coupled only through the hidden-feature distillation loss.  Each
// iteration updates the reconstruction module and then the synthesis
// module on the same batch; the peer's hidden features are always taken
// from its most recent forward on that batch and detached, so no gradient
// ever crosses streams.

#ifndef ANYFACE_TRAINER_HPP_
#define ANYFACE_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "anyface/cmd.hpp"
#include "anyface/dataset.hpp"
#include "anyface/encoders.hpp"
#include "anyface/losses.hpp"
#include "anyface/optimizer.hpp"
#include "anyface/tensor.hpp"

namespace anyface {

struct TrainConfig {
  std::uint64_t seed = 1;
  int batch_size = 16;
  int steps = 2000;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int m_split = 6;
  int n_split = 2;
  int checkpoint_interval = 500;
  int cmd_layers = 3;
  // Ablation: replace the diverse triplet term with plain latent
  // regression in the synthesis objective.
  bool use_pair_loss = false;
  LossWeights loss;
  std::string data;      // dataset directory
  std::string encoders;  // encoder checkpoint (.tns)
  std::string out;       // output directory for checkpoints + losses.csv
};

// Strict JSON parsing: any unrecognized key is a ConfigError naming it.
TrainConfig parse_train_config(const std::string& json_text);
TrainConfig load_train_config(const std::string& path);
std::string train_config_to_json(const TrainConfig& config);

struct LossRecord {
  int step = 0;
  double l_s = 0, dt = 0, cmt_s = 0, clip = 0;
  double l_t = 0, mse = 0, cmt_r = 0, rec = 0;
};

struct SynthesisResult {
  Tensor image;   // H x W x C
  Tensor latent;  // L x d composed latent
};

class Trainer {
 public:
  Trainer(Dataset data, EncoderPair encoders, const TrainConfig& config);

  using StepCallback = std::function<void(int step, const Trainer&)>;

  // One alternating iteration (reconstruction update, then synthesis
  // update, sharing this step's batch and caption draws); advances the
  // step counter.
  LossRecord train_step();
  // Runs the configured number of steps, writes model_step<N>.ckpt at
  // every checkpoint interval (and at the end) plus losses.csv under
  // config.out.  The callback, if set, runs after every step.
  void train(const StepCallback& callback = nullptr);

  // Single-stream updates on an explicit batch of sample indices, using
  // the current step's deterministic draws; the peer stream's hidden
  // targets are computed on the spot (forward only, detached).  Neither
  // advances the step counter.
  LossRecord reconstruction_step(const std::vector<std::int64_t>& batch);
  LossRecord synthesis_step(const std::vector<std::int64_t>& batch);

  // Forward-only loss evaluation on the deterministic probe batch (first
  // batch_size samples, seed-derived draws); used to verify checkpoints.
  LossRecord probe_losses() const;

  // Inference: synthesis path without losses or updates.  1..10 captions.
  SynthesisResult synthesize(const std::vector<Caption>& captions,
                             std::uint64_t style_seed) const;
  // Text-guided edit of an invertible source image: the first
  // L - m_split_override latent rows come from the inverted source, the
  // rest from the caption.  m_split_override = 0 reproduces the source.
  Tensor manipulate(const Tensor& source_image, const Caption& caption,
                    int m_split_override) const;

  void save_checkpoint(const std::string& path) const;
  static Trainer load_checkpoint(const std::string& path,
                                 const std::string& data_override = "",
                                 const std::string& encoders_override = "");

  const TrainConfig& config() const { return config_; }
  const Dataset& dataset() const { return data_; }
  const World& world() const { return data_.world(); }
  const EncoderPair& encoders() const { return encoders_; }
  const CmdModule& synthesis_module() const { return synth_; }
  const CmdModule& reconstruction_module() const { return rec_; }
  int step() const { return step_; }
  const std::vector<LossRecord>& history() const { return history_; }

  // Batch of sample indices used by a given step (epoch-shuffled without
  // replacement, partial tail batches dropped).
  std::vector<std::int64_t> batch_for_step(int step) const;

 private:
  struct StepDraws {
    std::vector<int> caption;      // per batch slot: caption index for T
    std::vector<int> neg_slot;     // batch slot supplying T'
    std::vector<int> neg_caption;  // caption index within the T' sample
    std::vector<Tensor> style;     // per slot: 1 x noise_dim z draw
  };
  // Synthesis forward pieces, pending the distillation term (whose target
  // is the reconstruction stream's hidden on the same batch).
  struct SynthForward {
    std::vector<Tensor> dt_terms;
    std::vector<Tensor> clip_terms;
    std::vector<Tensor> pos_hidden;       // tape-attached
    std::vector<Tensor> detached_hidden;  // targets for the peer stream
  };

  StepDraws draws_from(Rng& rng, std::size_t batch) const;
  StepDraws step_draws(int step, std::size_t batch) const;
  StepDraws probe_draws(std::size_t batch) const;
  std::vector<std::int64_t> probe_batch() const;
  std::vector<Tensor> reconstruction_hiddens(
      const std::vector<std::int64_t>& batch) const;
  SynthForward synthesis_forward(const std::vector<std::int64_t>& batch,
                                 const StepDraws& draws) const;
  Tensor reconstruction_forward(const std::vector<std::int64_t>& batch,
                                const std::vector<Tensor>& text_hiddens,
                                LossRecord* record,
                                std::vector<Tensor>* hiddens_out) const;
  Tensor finish_synthesis(const SynthForward& forward,
                          const std::vector<Tensor>& image_hiddens,
                          LossRecord* record) const;
  void apply_update(AdamOptimizer& optimizer, const Tensor& loss,
                    int step_index);
  const Tensor& inverted_latent(std::int64_t index) const;
  void write_losses_csv() const;

  TrainConfig config_;
  Dataset data_;
  EncoderPair encoders_;
  CmdModule synth_;
  CmdModule rec_;
  AdamOptimizer synth_opt_;
  AdamOptimizer rec_opt_;
  int step_ = 0;
  std::vector<LossRecord> history_;
  mutable std::vector<Tensor> inverted_;  // lazy per-sample invert cache
};

}  // namespace anyface

#endif  // ANYFACE_TRAINER_HPP_
