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

#include "anyface/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "anyface/errors.hpp"
#include "anyface/optimizer.hpp"
#include "anyface/rng.hpp"
#include "anyface/tensor_io.hpp"
#include "anyface/vocab.hpp"

namespace anyface {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kCheckpointFormat = "anyface-encoders-v1";

void validate_config(const EncoderConfig& c) {
  if (c.embed_dim < 1 || c.token_dim < 1 || c.text_hidden < 1 ||
      c.image_hidden < 1) {
    throw ConfigError("encoder layer widths must be positive");
  }
  if (c.temperature <= 0.0) {
    throw ConfigError("contrastive temperature must be positive");
  }
  if (c.batch_size < 2) {
    throw ConfigError("contrastive batches need at least 2 pairs");
  }
  if (c.retrieval_gallery < 2) {
    throw ConfigError("retrieval gallery must hold at least 2 candidates");
  }
  if (c.holdout_pairs < c.retrieval_gallery) {
    throw ConfigError("holdout must cover at least one retrieval gallery");
  }
  if (c.target_accuracy <= 0.0 || c.target_accuracy > 1.0) {
    throw ConfigError("target accuracy must lie in (0, 1]");
  }
  if (c.max_epochs < 1) throw ConfigError("max_epochs must be positive");
}

Tensor flatten_image(const Tensor& image, int input_dim) {
  if (image.numel() != input_dim) {
    throw ShapeError("image has " + std::to_string(image.numel()) +
                     " values, encoder expects " + std::to_string(input_dim));
  }
  return reshape(image, {1, input_dim});
}

}  // namespace

// ---- TextEncoder ------------------------------------------------------------

TextEncoder::TextEncoder(int token_dim, int hidden, int embed_dim,
                         std::uint64_t seed)
    : token_dim_(token_dim), hidden_(hidden), embed_dim_(embed_dim) {
  Rng rng(seed);
  token_table_ = Tensor::randn({kVocabSize, token_dim}, rng, 1.0, true);
  w1_ = Tensor::randn({token_dim, hidden}, rng,
                      1.0 / std::sqrt(static_cast<double>(token_dim)), true);
  b1_ = Tensor::zeros({1, hidden}, true);
  w2_ = Tensor::randn({hidden, embed_dim}, rng,
                      1.0 / std::sqrt(static_cast<double>(hidden)), true);
  b2_ = Tensor::zeros({1, embed_dim}, true);
}

Tensor TextEncoder::pool(const Caption& caption) const {
  if (caption.tokens.empty()) {
    throw InputError("cannot encode an empty caption");
  }
  std::vector<int> ids = caption.tokens;
  for (int id : ids) {
    if (id < 0 || id >= kVocabSize) {
      throw InputError("caption token id " + std::to_string(id) +
                       " outside the vocabulary");
    }
  }
  // Bag-of-words: a caption is a set of mentions, so wording order must not
  // leak into the embedding.  Sorting makes the mean bitwise order-free.
  std::sort(ids.begin(), ids.end());
  return mean_rows(embed_rows(token_table_, ids));
}

Tensor TextEncoder::project(const Tensor& pooled) const {
  Tensor h = tanh_t(add_rowwise(matmul(pooled, w1_), b1_));
  return add_rowwise(matmul(h, w2_), b2_);
}

Tensor TextEncoder::encode(const Caption& caption) const {
  return project(pool(caption));
}

std::vector<Tensor> TextEncoder::parameters() const {
  return {token_table_, w1_, b1_, w2_, b2_};
}

// ---- ImageEncoder -----------------------------------------------------------

ImageEncoder::ImageEncoder(int input_dim, int hidden, int embed_dim,
                           std::uint64_t seed)
    : input_dim_(input_dim), hidden_(hidden), embed_dim_(embed_dim) {
  Rng rng(seed);
  w1_ = Tensor::randn({input_dim, hidden}, rng,
                      1.0 / std::sqrt(static_cast<double>(input_dim)), true);
  b1_ = Tensor::zeros({1, hidden}, true);
  w2_ = Tensor::randn({hidden, embed_dim}, rng,
                      1.0 / std::sqrt(static_cast<double>(hidden)), true);
  b2_ = Tensor::zeros({1, embed_dim}, true);
}

Tensor ImageEncoder::project(const Tensor& flat) const {
  // ReLU hidden layer: the feature map's local sensitivity then depends
  // only on which units are active, not on how deep into a saturating
  // range the input sits, so feature distances track pixel distances
  // comparably across differently-saturated images.
  Tensor h = relu(add_rowwise(matmul(flat, w1_), b1_));
  return add_rowwise(matmul(h, w2_), b2_);
}

Tensor ImageEncoder::encode(const Tensor& image) const {
  return project(flatten_image(image, input_dim_));
}

std::vector<Tensor> ImageEncoder::parameters() const {
  return {w1_, b1_, w2_, b2_};
}

// ---- InfoNCE ----------------------------------------------------------------

Tensor clip_batch_loss(const Tensor& text_embeds, const Tensor& image_embeds,
                       double temperature) {
  if (text_embeds.rank() != 2 || image_embeds.rank() != 2 ||
      text_embeds.shape() != image_embeds.shape()) {
    throw ShapeError("contrastive loss needs row-aligned n x d batches");
  }
  if (text_embeds.rows() < 2) {
    throw InputError("contrastive loss needs at least 2 pairs");
  }
  Tensor tn = l2_normalize_rows(text_embeds);
  Tensor im = l2_normalize_rows(image_embeds);
  Tensor logits = matmul(tn, transpose(im));
  Tensor text_to_image = softmax(logits, temperature);
  Tensor image_to_text = softmax(transpose(logits), temperature);
  Tensor ce = add(mean(log_t(diag(text_to_image))),
                  mean(log_t(diag(image_to_text))));
  return mul_scalar(ce, -0.5);
}

// ---- EncoderPair ------------------------------------------------------------

EncoderPair::EncoderPair(const EncoderConfig& config, const World& world)
    : config_(config) {
  validate_config(config);
  const int input_dim = world.config().image_height *
                        world.config().image_width *
                        world.config().image_channels;
  text_ = TextEncoder(config.token_dim, config.text_hidden, config.embed_dim,
                      substream(config.seed, "enc.text"));
  image_ = ImageEncoder(input_dim, config.image_hidden, config.embed_dim,
                        substream(config.seed, "enc.image"));
}

std::vector<Tensor> EncoderPair::parameters() const {
  std::vector<Tensor> out = text_.parameters();
  for (Tensor& p : image_.parameters()) out.push_back(p);
  return out;
}

std::uint64_t EncoderPair::fingerprint() const {
  return tensors_fingerprint(parameters());
}

void EncoderPair::freeze() {
  for (Tensor& p : text_.parameters()) p.set_requires_grad(false);
  for (Tensor& p : image_.parameters()) p.set_requires_grad(false);
  // parameters() hands out shared handles, so the flag change above reaches
  // the stored tensors; re-fetch to keep that assumption checked.
  for (const Tensor& p : parameters()) {
    if (p.requires_grad()) throw NumericError("freeze failed to stick");
  }
  frozen_ = true;
}

void EncoderPair::pretrain(const Dataset& data) {
  if (frozen_) throw InputError("encoders are frozen; cannot pretrain again");
  const std::int64_t n = data.size();
  const std::int64_t holdout = config_.holdout_pairs;
  const std::int64_t train_n = n - holdout;
  if (train_n < config_.batch_size) {
    throw ConfigError("dataset leaves " + std::to_string(train_n) +
                      " training pairs after the holdout; need at least one "
                      "batch of " + std::to_string(config_.batch_size));
  }

  AdamOptimizer opt(parameters(), AdamConfig{config_.learning_rate});
  Rng rng(substream(config_.seed, "enc.pretrain"));
  const int input_dim = image_.input_dim();
  double best = 0.0;
  std::vector<std::vector<double>> best_weights;
  int stale_epochs = 0;

  for (int epoch = 0; epoch < config_.max_epochs; ++epoch) {
    std::vector<std::int64_t> perm(static_cast<std::size_t>(train_n));
    std::iota(perm.begin(), perm.end(), 0);
    for (std::int64_t i = train_n - 1; i > 0; --i) {
      const auto j = rng.uniform_index(static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(j)]);
    }
    const std::int64_t batches = train_n / config_.batch_size;
    for (std::int64_t b = 0; b < batches; ++b) {
      std::vector<Tensor> text_rows, image_rows;
      text_rows.reserve(config_.batch_size);
      image_rows.reserve(config_.batch_size);
      for (int k = 0; k < config_.batch_size; ++k) {
        const auto& s = data.sample(perm[static_cast<std::size_t>(
            b * config_.batch_size + k)]);
        const auto cap = rng.uniform_index(s.captions.size());
        text_rows.push_back(text_.pool(s.captions[cap]));
        image_rows.push_back(flatten_image(s.image, input_dim));
      }
      Tensor text_emb = text_.project(stack_rows(text_rows));
      Tensor image_emb = image_.project(stack_rows(image_rows));
      Tensor loss =
          clip_batch_loss(text_emb, image_emb, config_.temperature);
      if (!std::isfinite(loss.value())) {
        throw NumericError("contrastive pretraining hit a non-finite loss "
                           "in epoch " + std::to_string(epoch));
      }
      opt.zero_grad();
      loss.backward();
      opt.step();
    }
    const double acc = holdout_retrieval(data);
    if (acc > best) {
      best = acc;
      stale_epochs = 0;
      best_weights.clear();
      for (const Tensor& p : parameters()) best_weights.push_back(p.data());
    } else {
      ++stale_epochs;
    }
    if (best >= config_.target_accuracy &&
        (best >= config_.stop_accuracy || stale_epochs >= config_.patience)) {
      break;
    }
  }
  if (best < config_.target_accuracy) {
    throw PretrainError("held-out retrieval accuracy plateaued below the " +
                            std::to_string(config_.target_accuracy) +
                            " target after " +
                            std::to_string(config_.max_epochs) + " epochs",
                        best);
  }
  // Keep the best weights seen, not whatever the last epoch left behind.
  {
    std::vector<Tensor> params = parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i].mutable_data() = best_weights[i];
    }
  }
  holdout_accuracy_ = best;
  freeze();
}

double EncoderPair::holdout_retrieval(const Dataset& data) const {
  const std::int64_t n = data.size();
  const std::int64_t holdout = config_.holdout_pairs;
  if (holdout > n) {
    throw InputError("holdout of " + std::to_string(holdout) +
                     " exceeds the dataset size " + std::to_string(n));
  }
  const std::int64_t start = n - holdout;
  const int gallery = config_.retrieval_gallery;
  const std::int64_t groups = holdout / gallery;
  if (groups == 0) {
    throw InputError("holdout smaller than one retrieval gallery");
  }

  // Deterministic protocol: caption 0 queries its own image.
  std::vector<std::vector<double>> text_unit, image_unit;
  text_unit.reserve(static_cast<std::size_t>(holdout));
  image_unit.reserve(static_cast<std::size_t>(holdout));
  for (std::int64_t i = 0; i < holdout; ++i) {
    const auto& s = data.sample(start + i);
    text_unit.push_back(
        l2_normalize_rows(text_.encode(s.captions[0])).data());
    image_unit.push_back(l2_normalize_rows(image_.encode(s.image)).data());
  }

  std::int64_t correct = 0;
  for (std::int64_t g = 0; g < groups; ++g) {
    for (int q = 0; q < gallery; ++q) {
      const auto& query = text_unit[static_cast<std::size_t>(g * gallery + q)];
      int best_idx = 0;
      double best_score = -2.0;
      for (int c = 0; c < gallery; ++c) {
        const auto& cand =
            image_unit[static_cast<std::size_t>(g * gallery + c)];
        double dot = 0.0;
        for (std::size_t k = 0; k < query.size(); ++k) dot += query[k] * cand[k];
        if (dot > best_score) {
          best_score = dot;
          best_idx = c;
        }
      }
      if (best_idx == q) ++correct;
    }
  }
  return static_cast<double>(correct) /
         static_cast<double>(groups * gallery);
}

void EncoderPair::save(const std::string& tns_path) const {
  std::vector<Tensor> params = parameters();
  save_tns(tns_path, params);

  json j;
  j["format"] = kCheckpointFormat;
  j["seed"] = config_.seed;
  j["embed_dim"] = config_.embed_dim;
  j["token_dim"] = config_.token_dim;
  j["text_hidden"] = config_.text_hidden;
  j["image_hidden"] = config_.image_hidden;
  j["image_input_dim"] = image_.input_dim();
  j["temperature"] = config_.temperature;
  j["learning_rate"] = config_.learning_rate;
  j["batch_size"] = config_.batch_size;
  j["max_epochs"] = config_.max_epochs;
  j["holdout_pairs"] = config_.holdout_pairs;
  j["retrieval_gallery"] = config_.retrieval_gallery;
  j["target_accuracy"] = config_.target_accuracy;
  j["accuracy"] = holdout_accuracy_;
  j["frozen"] = frozen_;
  j["vocab_fingerprint"] = fingerprint_hex(vocabulary_fingerprint());
  j["weights_fingerprint"] = fingerprint_hex(tensors_fingerprint(params));
  j["blocks"] = {"token_table", "text_w1", "text_b1", "text_w2", "text_b2",
                 "image_w1", "image_b1", "image_w2", "image_b2"};

  const fs::path side = fs::path(tns_path).replace_extension(".json");
  std::ofstream out(side);
  out << j.dump(2) << "\n";
  if (!out) throw InputError("failed to write " + side.string());
}

EncoderPair EncoderPair::load(const std::string& tns_path) {
  const fs::path side = fs::path(tns_path).replace_extension(".json");
  std::ifstream in(side);
  if (!in) throw InputError("encoder sidecar not found: " + side.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("encoder sidecar is not valid JSON: " +
                     std::string(e.what()));
  }
  if (j.value("format", "") != kCheckpointFormat) {
    throw InputError("unsupported encoder checkpoint format");
  }
  if (j.at("vocab_fingerprint").get<std::string>() !=
      fingerprint_hex(vocabulary_fingerprint())) {
    throw ConfigError("encoder checkpoint was trained against a different "
                      "vocabulary");
  }

  EncoderPair pair;
  pair.config_.seed = j.at("seed").get<std::uint64_t>();
  pair.config_.embed_dim = j.at("embed_dim").get<int>();
  pair.config_.token_dim = j.at("token_dim").get<int>();
  pair.config_.text_hidden = j.at("text_hidden").get<int>();
  pair.config_.image_hidden = j.at("image_hidden").get<int>();
  pair.config_.temperature = j.at("temperature").get<double>();
  pair.config_.learning_rate = j.at("learning_rate").get<double>();
  pair.config_.batch_size = j.at("batch_size").get<int>();
  pair.config_.max_epochs = j.at("max_epochs").get<int>();
  pair.config_.holdout_pairs = j.at("holdout_pairs").get<int>();
  pair.config_.retrieval_gallery = j.at("retrieval_gallery").get<int>();
  pair.config_.target_accuracy = j.at("target_accuracy").get<double>();
  pair.holdout_accuracy_ = j.at("accuracy").get<double>();

  const int input_dim = j.at("image_input_dim").get<int>();
  pair.text_ = TextEncoder(pair.config_.token_dim, pair.config_.text_hidden,
                           pair.config_.embed_dim,
                           substream(pair.config_.seed, "enc.text"));
  pair.image_ = ImageEncoder(input_dim, pair.config_.image_hidden,
                             pair.config_.embed_dim,
                             substream(pair.config_.seed, "enc.image"));

  std::vector<Tensor> blocks = load_tns(tns_path);
  std::vector<Tensor> params = pair.parameters();
  if (blocks.size() != params.size()) {
    throw InputError("encoder checkpoint holds " +
                     std::to_string(blocks.size()) + " blocks, expected " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (blocks[i].shape() != params[i].shape()) {
      throw InputError("encoder checkpoint block " + std::to_string(i) +
                       " has the wrong shape");
    }
    params[i].mutable_data() = blocks[i].data();
  }
  if (fingerprint_hex(tensors_fingerprint(params)) !=
      j.at("weights_fingerprint").get<std::string>()) {
    throw InputError("encoder checkpoint weights do not match their "
                     "fingerprint; the file is corrupt");
  }
  if (j.at("frozen").get<bool>()) pair.freeze();
  return pair;
}

}  // namespace anyface
