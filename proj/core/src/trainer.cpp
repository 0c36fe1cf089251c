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

#include "anyface/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "anyface/errors.hpp"
#include "anyface/tensor_io.hpp"
#include "anyface/vocab.hpp"

namespace anyface {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kCheckpointFormat = "anyface-checkpoint-v1";

Tensor mean_of(const std::vector<Tensor>& terms) {
  Tensor total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
  return mul_scalar(total, 1.0 / static_cast<double>(terms.size()));
}

void require_key_known(const json& j, const std::set<std::string>& allowed,
                       const std::string& scope) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown config key '" + scope + item.key() + "'");
    }
  }
}

TripletOrientation orientation_from_string(const std::string& s) {
  if (s == "prose") return TripletOrientation::kProse;
  if (s == "as-written") return TripletOrientation::kAsWritten;
  throw ConfigError("loss.dt_orientation must be 'prose' or 'as-written', "
                    "got '" + s + "'");
}

std::string orientation_to_string(TripletOrientation o) {
  return o == TripletOrientation::kProse ? "prose" : "as-written";
}

void validate_parsed(const TrainConfig& c) {
  if (c.batch_size < 2) {
    throw ConfigError("batch_size must be at least 2 (negative captions are "
                      "drawn in-batch)");
  }
  if (c.steps < 0) throw ConfigError("steps must be non-negative");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    throw ConfigError("learning_rate must be positive and finite");
  }
  if (c.adam_beta1 < 0.0 || c.adam_beta1 >= 1.0 || c.adam_beta2 < 0.0 ||
      c.adam_beta2 >= 1.0) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(c.adam_epsilon > 0.0)) {
    throw ConfigError("adam_epsilon must be positive");
  }
  if (c.m_split < 0 || c.n_split < 0) {
    throw ConfigError("m_split and n_split must be non-negative");
  }
  if (c.checkpoint_interval < 1) {
    throw ConfigError("checkpoint_interval must be at least 1");
  }
  if (c.cmd_layers < 1) throw ConfigError("cmd_layers must be at least 1");
  if (c.loss.pair_norm_order != 1 && c.loss.pair_norm_order != 2) {
    throw ConfigError("loss.pair_norm_order must be 1 or 2");
  }
  for (double v : {c.loss.lambda_cmt, c.loss.lambda_clip, c.loss.lambda_rec,
                   c.loss.margin}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("loss weights must be finite and non-negative");
    }
  }
}

}  // namespace

TrainConfig parse_train_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const std::set<std::string> kTop = {
      "seed",          "batch_size",     "steps",
      "learning_rate", "adam_beta1",     "adam_beta2",
      "adam_epsilon",  "m_split",        "n_split",
      "checkpoint_interval", "cmd_layers", "use_pair_loss",
      "loss",          "data",           "encoders",
      "out"};
  require_key_known(j, kTop, "");

  TrainConfig c;
  try {
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("steps")) c.steps = j["steps"].get<int>();
    if (j.contains("learning_rate")) {
      c.learning_rate = j["learning_rate"].get<double>();
    }
    if (j.contains("adam_beta1")) c.adam_beta1 = j["adam_beta1"].get<double>();
    if (j.contains("adam_beta2")) c.adam_beta2 = j["adam_beta2"].get<double>();
    if (j.contains("adam_epsilon")) {
      c.adam_epsilon = j["adam_epsilon"].get<double>();
    }
    if (j.contains("m_split")) c.m_split = j["m_split"].get<int>();
    if (j.contains("n_split")) c.n_split = j["n_split"].get<int>();
    if (j.contains("checkpoint_interval")) {
      c.checkpoint_interval = j["checkpoint_interval"].get<int>();
    }
    if (j.contains("cmd_layers")) c.cmd_layers = j["cmd_layers"].get<int>();
    if (j.contains("use_pair_loss")) {
      c.use_pair_loss = j["use_pair_loss"].get<bool>();
    }
    if (j.contains("data")) c.data = j["data"].get<std::string>();
    if (j.contains("encoders")) c.encoders = j["encoders"].get<std::string>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();

    if (j.contains("loss")) {
      const json& l = j["loss"];
      if (!l.is_object()) throw ConfigError("'loss' must be a JSON object");
      static const std::set<std::string> kLoss = {
          "lambda_cmt",      "lambda_clip", "lambda_rec",
          "margin",          "pair_norm_order", "dt_orientation"};
      require_key_known(l, kLoss, "loss.");
      if (l.contains("lambda_cmt")) {
        c.loss.lambda_cmt = l["lambda_cmt"].get<double>();
      }
      if (l.contains("lambda_clip")) {
        c.loss.lambda_clip = l["lambda_clip"].get<double>();
      }
      if (l.contains("lambda_rec")) {
        c.loss.lambda_rec = l["lambda_rec"].get<double>();
      }
      if (l.contains("margin")) c.loss.margin = l["margin"].get<double>();
      if (l.contains("pair_norm_order")) {
        c.loss.pair_norm_order = l["pair_norm_order"].get<int>();
      }
      if (l.contains("dt_orientation")) {
        c.loss.dt_orientation = orientation_from_string(
            l["dt_orientation"].get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("config value has the wrong type: " +
                      std::string(e.what()));
  }
  validate_parsed(c);
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config file not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_train_config(buf.str());
}

std::string train_config_to_json(const TrainConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["batch_size"] = c.batch_size;
  j["steps"] = c.steps;
  j["learning_rate"] = c.learning_rate;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_epsilon"] = c.adam_epsilon;
  j["m_split"] = c.m_split;
  j["n_split"] = c.n_split;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["cmd_layers"] = c.cmd_layers;
  j["use_pair_loss"] = c.use_pair_loss;
  j["loss"] = {{"lambda_cmt", c.loss.lambda_cmt},
               {"lambda_clip", c.loss.lambda_clip},
               {"lambda_rec", c.loss.lambda_rec},
               {"margin", c.loss.margin},
               {"pair_norm_order", c.loss.pair_norm_order},
               {"dt_orientation", orientation_to_string(c.loss.dt_orientation)}};
  j["data"] = c.data;
  j["encoders"] = c.encoders;
  j["out"] = c.out;
  return j.dump();
}

// ---- Trainer ----------------------------------------------------------------

Trainer::Trainer(Dataset data, EncoderPair encoders, const TrainConfig& config)
    : config_(config),
      data_(std::move(data)),
      encoders_(std::move(encoders)),
      synth_(CmdConfig{encoders_.config().embed_dim, config.cmd_layers,
                       data_.world().latent_rows(), data_.world().latent_dim()},
             config.seed),
      rec_(CmdConfig{encoders_.config().embed_dim, config.cmd_layers,
                     data_.world().latent_rows(), data_.world().latent_dim()},
           config.seed),
      synth_opt_(synth_.parameters(),
                 AdamConfig{config.learning_rate, config.adam_beta1,
                            config.adam_beta2, config.adam_epsilon}),
      rec_opt_(rec_.parameters(),
               AdamConfig{config.learning_rate, config.adam_beta1,
                          config.adam_beta2, config.adam_epsilon}) {
  validate_parsed(config_);
  const World& w = data_.world();
  if (config_.m_split + config_.n_split != w.latent_rows()) {
    throw ConfigError("m_split + n_split must equal the latent row count " +
                      std::to_string(w.latent_rows()) + ", got " +
                      std::to_string(config_.m_split) + " + " +
                      std::to_string(config_.n_split));
  }
  if (data_.size() < config_.batch_size) {
    throw ConfigError("dataset holds " + std::to_string(data_.size()) +
                      " samples, fewer than one batch of " +
                      std::to_string(config_.batch_size));
  }
  if (!encoders_.frozen()) {
    throw InputError("encoders must be pretrained (frozen) before training");
  }
  if (encoders_.image().input_dim() != w.pixels()) {
    throw ShapeError("image encoder expects " +
                     std::to_string(encoders_.image().input_dim()) +
                     " pixels but the world renders " +
                     std::to_string(w.pixels()));
  }
  // Both streams start at the population average: the head's final bias is
  // the average latent, so untrained outputs already decode to the mean
  // face and the triplet ratios start well-conditioned.
  synth_.set_output_anchor(w.average_latent());
  rec_.set_output_anchor(w.average_latent());
  inverted_.resize(static_cast<std::size_t>(data_.size()));
}

const Tensor& Trainer::inverted_latent(std::int64_t index) const {
  auto& slot = inverted_[static_cast<std::size_t>(index)];
  if (!slot.defined()) {
    slot = data_.world().invert(data_.sample(index).image);
  }
  return slot;
}

std::vector<std::int64_t> Trainer::batch_for_step(int step) const {
  const std::int64_t n = data_.size();
  const std::int64_t b = config_.batch_size;
  const std::int64_t usable = n - (n % b);
  const std::int64_t cursor = static_cast<std::int64_t>(step) * b;
  const std::uint64_t epoch = static_cast<std::uint64_t>(cursor / usable);
  const std::int64_t offset = cursor % usable;

  std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(substream(config_.seed, "epoch", epoch));
  for (std::int64_t i = n - 1; i > 0; --i) {
    const auto j = rng.uniform_index(static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(j)]);
  }
  return {perm.begin() + offset, perm.begin() + offset + b};
}

Trainer::StepDraws Trainer::draws_from(Rng& rng, std::size_t batch) const {
  StepDraws d;
  d.caption.reserve(batch);
  d.neg_slot.reserve(batch);
  d.neg_caption.reserve(batch);
  d.style.reserve(batch);
  for (std::size_t k = 0; k < batch; ++k) {
    d.caption.push_back(
        static_cast<int>(rng.uniform_index(kCaptionsPerSample)));
  }
  for (std::size_t k = 0; k < batch; ++k) {
    // Any slot except k itself: the negative caption must come from a
    // different sample.  (Degenerate single-sample batches keep the draw
    // sequence aligned but are rejected wherever negatives are consumed.)
    const auto shift = batch > 1 ? rng.uniform_index(batch - 1) : 0;
    d.neg_slot.push_back(
        static_cast<int>((k + 1 + shift) % batch));
    d.neg_caption.push_back(
        static_cast<int>(rng.uniform_index(kCaptionsPerSample)));
  }
  for (std::size_t k = 0; k < batch; ++k) {
    d.style.push_back(data_.world().sample_noise(rng));
  }
  return d;
}

Trainer::StepDraws Trainer::step_draws(int step, std::size_t batch) const {
  Rng rng(substream(config_.seed, "step",
                    static_cast<std::uint64_t>(step)));
  return draws_from(rng, batch);
}

Trainer::StepDraws Trainer::probe_draws(std::size_t batch) const {
  Rng rng(substream(config_.seed, "probe"));
  return draws_from(rng, batch);
}

std::vector<std::int64_t> Trainer::probe_batch() const {
  std::vector<std::int64_t> batch(
      static_cast<std::size_t>(config_.batch_size));
  std::iota(batch.begin(), batch.end(), 0);
  return batch;
}

std::vector<Tensor> Trainer::reconstruction_hiddens(
    const std::vector<std::int64_t>& batch) const {
  std::vector<Tensor> out;
  out.reserve(batch.size());
  for (std::int64_t idx : batch) {
    const auto& s = data_.sample(idx);
    out.push_back(
        rec_.forward(encoders_.image().encode(s.image)).hidden.detach());
  }
  return out;
}

Trainer::SynthForward Trainer::synthesis_forward(
    const std::vector<std::int64_t>& batch, const StepDraws& draws) const {
  if (batch.size() < 2) {
    throw InputError("synthesis needs a batch of at least 2 samples to draw "
                     "negative captions");
  }
  const World& w = data_.world();
  const Tensor& w_bar = w.average_latent();
  SynthForward f;
  f.dt_terms.reserve(batch.size());
  f.clip_terms.reserve(batch.size());
  f.pos_hidden.reserve(batch.size());
  f.detached_hidden.reserve(batch.size());

  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& s = data_.sample(batch[k]);
    const Caption& cap =
        s.captions[static_cast<std::size_t>(draws.caption[k])];
    Tensor f_t = encoders_.text().encode(cap);
    CmdOutput pos = synth_.forward(f_t);

    const auto& neg_sample =
        data_.sample(batch[static_cast<std::size_t>(draws.neg_slot[k])]);
    const Caption& neg_cap =
        neg_sample.captions[static_cast<std::size_t>(draws.neg_caption[k])];
    Tensor w_neg = synth_.forward(encoders_.text().encode(neg_cap)).latent;

    const Tensor& target = inverted_latent(batch[k]);
    Tensor dt = config_.use_pair_loss
                    ? pair_loss(pos.latent, target,
                                config_.loss.pair_norm_order)
                    : dt_loss(pos.latent, w_neg, target, w_bar,
                              config_.loss.margin,
                              config_.loss.dt_orientation);

    Tensor composed = pos.latent;
    if (config_.n_split > 0) {
      Tensor w_c = w.mapping_network(draws.style[k], config_.n_split);
      composed = compose_latent(pos.latent, w_c, config_.m_split,
                                config_.n_split);
    }
    Tensor generated = w.decode(composed);
    Tensor f_it = encoders_.image().encode(generated);

    f.dt_terms.push_back(std::move(dt));
    f.clip_terms.push_back(clip_loss(f_t, f_it));
    f.detached_hidden.push_back(pos.hidden.detach());
    f.pos_hidden.push_back(std::move(pos.hidden));
  }
  return f;
}

Tensor Trainer::reconstruction_forward(
    const std::vector<std::int64_t>& batch,
    const std::vector<Tensor>& text_hiddens, LossRecord* record,
    std::vector<Tensor>* hiddens_out) const {
  const World& w = data_.world();
  std::vector<Tensor> mse_terms, cmt_terms, rec_terms;
  mse_terms.reserve(batch.size());
  cmt_terms.reserve(batch.size());
  rec_terms.reserve(batch.size());

  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& s = data_.sample(batch[k]);
    CmdOutput out = rec_.forward(encoders_.image().encode(s.image));
    Tensor reconstructed = w.decode(out.latent);
    mse_terms.push_back(mse_loss(out.latent, inverted_latent(batch[k])));
    cmt_terms.push_back(cmt_loss(out.hidden, text_hiddens[k]));
    rec_terms.push_back(rec_loss(reconstructed, s.image));
    if (hiddens_out) hiddens_out->push_back(out.hidden.detach());
  }

  Tensor mse_m = mean_of(mse_terms);
  Tensor cmt_m = mean_of(cmt_terms);
  Tensor rec_m = mean_of(rec_terms);
  Tensor l_t = reconstruction_objective(mse_m, cmt_m, rec_m, config_.loss);
  if (record) {
    record->l_t = l_t.value();
    record->mse = mse_m.value();
    record->cmt_r = cmt_m.value();
    record->rec = rec_m.value();
  }
  return l_t;
}

Tensor Trainer::finish_synthesis(const SynthForward& forward,
                                 const std::vector<Tensor>& image_hiddens,
                                 LossRecord* record) const {
  std::vector<Tensor> cmt_terms;
  cmt_terms.reserve(forward.pos_hidden.size());
  for (std::size_t k = 0; k < forward.pos_hidden.size(); ++k) {
    cmt_terms.push_back(cmt_loss(forward.pos_hidden[k], image_hiddens[k]));
  }
  Tensor dt_m = mean_of(forward.dt_terms);
  Tensor cmt_m = mean_of(cmt_terms);
  Tensor clip_m = mean_of(forward.clip_terms);
  Tensor l_s = synthesis_objective(dt_m, cmt_m, clip_m, config_.loss);
  if (record) {
    record->l_s = l_s.value();
    record->dt = dt_m.value();
    record->cmt_s = cmt_m.value();
    record->clip = clip_m.value();
  }
  return l_s;
}

void Trainer::apply_update(AdamOptimizer& optimizer, const Tensor& loss,
                           int step_index) {
  if (!std::isfinite(loss.value())) {
    throw DivergenceError("training loss became non-finite", step_index);
  }
  optimizer.zero_grad();
  try {
    Tensor root = loss;  // handles share the node; backward is non-const
    root.backward();
  } catch (const NumericError& e) {
    throw DivergenceError(std::string("gradient blow-up: ") + e.what(),
                          step_index);
  }
  optimizer.step();
}

LossRecord Trainer::train_step() {
  const int step_index = step_ + 1;
  const auto batch = batch_for_step(step_);
  const auto draws = step_draws(step_, batch.size());

  // One synthesis forward serves both streams: its detached hiddens are
  // the reconstruction stream's distillation targets, and its tape is
  // reused for the synthesis update afterwards (the reconstruction update
  // does not touch synthesis parameters, so the tape stays valid).
  SynthForward sf = synthesis_forward(batch, draws);

  LossRecord record;
  record.step = step_index;
  std::vector<Tensor> rec_hiddens;
  Tensor l_t = reconstruction_forward(batch, sf.detached_hidden, &record,
                                      &rec_hiddens);
  apply_update(rec_opt_, l_t, step_index);

  Tensor l_s = finish_synthesis(sf, rec_hiddens, &record);
  apply_update(synth_opt_, l_s, step_index);

  ++step_;
  history_.push_back(record);
  return record;
}

LossRecord Trainer::reconstruction_step(
    const std::vector<std::int64_t>& batch) {
  if (batch.empty()) throw InputError("empty batch");
  const auto draws = step_draws(step_, batch.size());
  std::vector<Tensor> text_hiddens;
  text_hiddens.reserve(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& s = data_.sample(batch[k]);
    const Caption& cap =
        s.captions[static_cast<std::size_t>(draws.caption[k])];
    text_hiddens.push_back(
        synth_.forward(encoders_.text().encode(cap)).hidden.detach());
  }
  LossRecord record;
  record.step = step_ + 1;
  Tensor l_t =
      reconstruction_forward(batch, text_hiddens, &record, nullptr);
  apply_update(rec_opt_, l_t, record.step);
  return record;
}

LossRecord Trainer::synthesis_step(const std::vector<std::int64_t>& batch) {
  const auto draws = step_draws(step_, batch.size());
  std::vector<Tensor> image_hiddens = reconstruction_hiddens(batch);
  SynthForward sf = synthesis_forward(batch, draws);
  LossRecord record;
  record.step = step_ + 1;
  Tensor l_s = finish_synthesis(sf, image_hiddens, &record);
  apply_update(synth_opt_, l_s, record.step);
  return record;
}

LossRecord Trainer::probe_losses() const {
  const auto batch = probe_batch();
  const auto draws = probe_draws(batch.size());
  SynthForward sf = synthesis_forward(batch, draws);
  LossRecord record;
  record.step = step_;
  std::vector<Tensor> rec_hiddens;
  reconstruction_forward(batch, sf.detached_hidden, &record, &rec_hiddens);
  finish_synthesis(sf, rec_hiddens, &record);
  return record;
}

void Trainer::train(const StepCallback& callback) {
  if (config_.out.empty()) {
    throw ConfigError("train config needs an output directory ('out')");
  }
  fs::create_directories(config_.out);
  const auto checkpoint_path = [&](int step) {
    return (fs::path(config_.out) /
            ("model_step" + std::to_string(step) + ".ckpt"))
        .string();
  };
  if (config_.steps == 0) save_checkpoint(checkpoint_path(0));
  while (step_ < config_.steps) {
    LossRecord record = train_step();
    if (record.step % config_.checkpoint_interval == 0 ||
        record.step == config_.steps) {
      save_checkpoint(checkpoint_path(record.step));
    }
    if (callback) callback(record.step, *this);
  }
  write_losses_csv();
}

void Trainer::write_losses_csv() const {
  const fs::path path = fs::path(config_.out) / "losses.csv";
  std::ofstream out(path);
  out << "step,l_s,dt,cmt_s,clip,l_t,mse,cmt_r,rec\n";
  out << std::setprecision(17);
  for (const LossRecord& r : history_) {
    out << r.step << ',' << r.l_s << ',' << r.dt << ',' << r.cmt_s << ','
        << r.clip << ',' << r.l_t << ',' << r.mse << ',' << r.cmt_r << ','
        << r.rec << '\n';
  }
  if (!out) throw InputError("failed to write " + path.string());
}

SynthesisResult Trainer::synthesize(const std::vector<Caption>& captions,
                                    std::uint64_t style_seed) const {
  if (captions.empty() || captions.size() > 10) {
    throw InputError("synthesis takes 1 to 10 captions, got " +
                     std::to_string(captions.size()));
  }
  std::vector<Tensor> rows;
  rows.reserve(captions.size());
  for (const Caption& c : captions) {
    rows.push_back(encoders_.text().encode(c));
  }
  Tensor features = rows.size() == 1 ? rows.front() : stack_rows(rows);
  CmdOutput out = synth_.forward(features);

  Tensor composed = out.latent;
  if (config_.n_split > 0) {
    Tensor w_c = data_.world().style_from_seed(style_seed, config_.n_split);
    composed =
        compose_latent(out.latent, w_c, config_.m_split, config_.n_split);
  }
  SynthesisResult result;
  result.latent = composed.detach();
  result.image = data_.world().decode(result.latent).detach();
  return result;
}

Tensor Trainer::manipulate(const Tensor& source_image, const Caption& caption,
                           int m_split_override) const {
  const int rows = data_.world().latent_rows();
  if (m_split_override < 0 || m_split_override > rows) {
    throw InputError("m-split override must lie in [0, " +
                     std::to_string(rows) + "], got " +
                     std::to_string(m_split_override));
  }
  Tensor source_latent = data_.world().invert(source_image);
  if (m_split_override == 0) {
    return data_.world().decode(source_latent).detach();
  }
  CmdOutput out = synth_.forward(encoders_.text().encode(caption));
  const int n = rows - m_split_override;
  Tensor composed =
      n == 0 ? out.latent
             : compose_latent(out.latent, rows_slice(source_latent, 0, n),
                              m_split_override, n);
  return data_.world().decode(composed.detach()).detach();
}

void Trainer::save_checkpoint(const std::string& path) const {
  json header;
  header["format"] = kCheckpointFormat;
  header["step"] = step_;
  header["config"] = json::parse(train_config_to_json(config_));
  header["world_fingerprint"] =
      fingerprint_hex(data_.world().fingerprint());
  header["encoders_fingerprint"] = fingerprint_hex(encoders_.fingerprint());
  header["vocab_fingerprint"] = fingerprint_hex(vocabulary_fingerprint());
  header["blocks"] = {"synthesis_parameters", "reconstruction_parameters",
                      "synthesis_adam_m", "synthesis_adam_v",
                      "reconstruction_adam_m", "reconstruction_adam_v",
                      "optimizer_steps"};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint: " + path);
  out << header.dump() << "\n";
  for (const Tensor& p : synth_.parameters()) write_tns(out, p);
  for (const Tensor& p : rec_.parameters()) write_tns(out, p);

  const auto as_block = [](std::vector<double> v) {
    const auto n = static_cast<std::int64_t>(v.size());
    return Tensor::from_data({n}, std::move(v));
  };
  write_tns(out, as_block(synth_opt_.flattened_m()));
  write_tns(out, as_block(synth_opt_.flattened_v()));
  write_tns(out, as_block(rec_opt_.flattened_m()));
  write_tns(out, as_block(rec_opt_.flattened_v()));
  write_tns(out, as_block({static_cast<double>(synth_opt_.steps_taken()),
                           static_cast<double>(rec_opt_.steps_taken())}));
  if (!out) throw InputError("failed while writing checkpoint: " + path);
}

Trainer Trainer::load_checkpoint(const std::string& path,
                                 const std::string& data_override,
                                 const std::string& encoders_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("checkpoint not found: " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw InputError("checkpoint is missing its header: " + path);
  }
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::parse_error& e) {
    throw InputError("checkpoint header is not valid JSON: " +
                     std::string(e.what()));
  }
  if (header.value("format", "") != kCheckpointFormat) {
    throw InputError("unsupported checkpoint format in " + path);
  }
  if (header.at("vocab_fingerprint").get<std::string>() !=
      fingerprint_hex(vocabulary_fingerprint())) {
    throw ConfigError("checkpoint was trained against a different "
                      "vocabulary");
  }

  TrainConfig config = parse_train_config(header.at("config").dump());
  const std::string data_dir =
      data_override.empty() ? config.data : data_override;
  const std::string encoders_path =
      encoders_override.empty() ? config.encoders : encoders_override;
  if (data_dir.empty() || encoders_path.empty()) {
    throw InputError("checkpoint does not record dataset/encoder paths; "
                     "pass them explicitly");
  }

  Dataset data = Dataset::load(data_dir);
  EncoderPair encoders = EncoderPair::load(encoders_path);
  if (fingerprint_hex(data.world().fingerprint()) !=
      header.at("world_fingerprint").get<std::string>()) {
    throw ConfigError("checkpoint was trained in a different world than "
                      "the dataset at " + data_dir);
  }
  if (fingerprint_hex(encoders.fingerprint()) !=
      header.at("encoders_fingerprint").get<std::string>()) {
    throw ConfigError("checkpoint was trained with different encoders than "
                      + encoders_path);
  }

  Trainer trainer(std::move(data), std::move(encoders), config);

  const auto read_into = [&in, &path](std::vector<Tensor> params) {
    for (Tensor& p : params) {
      Tensor block = read_tns(in);
      if (block.shape() != p.shape()) {
        throw InputError("checkpoint block shape mismatch in " + path);
      }
      p.mutable_data() = block.data();
    }
  };
  read_into(trainer.synth_.parameters());
  read_into(trainer.rec_.parameters());

  const auto read_vector = [&in]() { return read_tns(in).data(); };
  const auto sm = read_vector();
  const auto sv = read_vector();
  const auto rm = read_vector();
  const auto rv = read_vector();
  const auto counters = read_vector();
  if (counters.size() != 2) {
    throw InputError("checkpoint optimizer counters malformed in " + path);
  }
  trainer.synth_opt_.restore(sm, sv,
                             static_cast<std::int64_t>(counters[0]));
  trainer.rec_opt_.restore(rm, rv, static_cast<std::int64_t>(counters[1]));
  trainer.step_ = header.at("step").get<int>();
  return trainer;
}

}  // namespace anyface
