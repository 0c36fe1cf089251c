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

#include "anyface/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "anyface/errors.hpp"
#include "anyface/tensor_io.hpp"
#include "anyface/vocab.hpp"

namespace anyface {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kManifestFormat = "anyface-dataset-v1";

std::string sample_stem(std::int64_t id) {
  return "sample_" + std::to_string(id);
}

json world_config_json(const WorldConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["latent_rows"] = c.latent_rows;
  j["latent_dim"] = c.latent_dim;
  j["image_height"] = c.image_height;
  j["image_width"] = c.image_width;
  j["image_channels"] = c.image_channels;
  j["noise_dim"] = c.noise_dim;
  j["average_latent_samples"] = c.average_latent_samples;
  j["attribute_scale"] = c.attribute_scale;
  j["style_scale"] = c.style_scale;
  j["decoder_gain"] = c.decoder_gain;
  j["decoder_bias_level"] = c.decoder_bias_level;
  j["attribute_contrast"] = c.attribute_contrast;
  return j;
}

WorldConfig world_config_from_json(const json& j) {
  WorldConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.latent_rows = j.at("latent_rows").get<int>();
  c.latent_dim = j.at("latent_dim").get<int>();
  c.image_height = j.at("image_height").get<int>();
  c.image_width = j.at("image_width").get<int>();
  c.image_channels = j.at("image_channels").get<int>();
  c.noise_dim = j.at("noise_dim").get<int>();
  c.average_latent_samples = j.at("average_latent_samples").get<int>();
  c.attribute_scale = j.at("attribute_scale").get<double>();
  c.style_scale = j.at("style_scale").get<double>();
  c.decoder_gain = j.at("decoder_gain").get<double>();
  c.decoder_bias_level = j.at("decoder_bias_level").get<double>();
  c.attribute_contrast = j.at("attribute_contrast").get<double>();
  return c;
}

Tensor caption_tensor(const Caption& caption) {
  std::vector<double> ids;
  ids.reserve(caption.tokens.size());
  for (int t : caption.tokens) ids.push_back(static_cast<double>(t));
  return Tensor::from_data({static_cast<std::int64_t>(ids.size())}, ids);
}

Caption caption_from_tensor(const Tensor& t) {
  Caption c;
  c.tokens.reserve(t.numel());
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    double v = t.data()[i];
    auto id = static_cast<int>(std::llround(v));
    if (std::abs(v - id) > 1e-9 || id < 0 || id >= kVocabSize) {
      throw InputError("caption block holds a non-token value " +
                       std::to_string(v));
    }
    c.tokens.push_back(id);
  }
  return c;
}

}  // namespace

Dataset Dataset::generate(const WorldConfig& config, std::int64_t count,
                          const std::string& dir) {
  if (count < 1) {
    throw InputError("dataset size must be at least 1, got " +
                     std::to_string(count));
  }
  fs::create_directories(dir);
  World world(config);

  for (std::int64_t id = 0; id < count; ++id) {
    PairedSample s = world.sample_paired(config.seed, id);

    std::vector<Tensor> blocks;
    std::vector<std::string> names;
    blocks.push_back(s.latent);
    names.emplace_back("latent");
    blocks.push_back(s.image);
    names.emplace_back("image");
    for (std::size_t j = 0; j < s.captions.size(); ++j) {
      blocks.push_back(caption_tensor(s.captions[j]));
      names.push_back("caption_" + std::to_string(j));
    }

    const fs::path tns_path = fs::path(dir) / (sample_stem(id) + ".tns");
    save_tns(tns_path.string(), blocks);

    json sidecar;
    sidecar["id"] = id;
    sidecar["attributes"] = s.attributes;
    json block_list = json::array();
    std::uint64_t offset = 0;
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      json b;
      b["name"] = names[j];
      b["offset"] = offset;
      offset += tns_encoded_size(blocks[j]);
      block_list.push_back(std::move(b));
    }
    sidecar["blocks"] = std::move(block_list);

    std::ofstream side(fs::path(dir) / (sample_stem(id) + ".json"));
    side << sidecar.dump(2) << "\n";
    if (!side) {
      throw InputError("failed to write sample sidecar for id " +
                       std::to_string(id));
    }
  }

  json manifest;
  manifest["format"] = kManifestFormat;
  manifest["count"] = count;
  manifest["world"] = world_config_json(config);
  manifest["world_fingerprint"] = fingerprint_hex(world.fingerprint());
  manifest["vocabulary"] = vocabulary();
  manifest["vocab_fingerprint"] = fingerprint_hex(vocabulary_fingerprint());
  manifest["sample_pattern"] = "sample_<id>.tns";
  std::ofstream mf(fs::path(dir) / "manifest.json");
  mf << manifest.dump(2) << "\n";
  if (!mf) throw InputError("failed to write dataset manifest in " + dir);

  return load(dir);
}

Dataset Dataset::load(const std::string& dir) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream mf(manifest_path);
  if (!mf) {
    throw InputError("dataset manifest not found: " + manifest_path.string());
  }
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::parse_error& e) {
    throw InputError("dataset manifest is not valid JSON: " +
                     std::string(e.what()));
  }
  if (manifest.value("format", "") != kManifestFormat) {
    throw InputError("unsupported dataset format '" +
                     manifest.value("format", std::string("<missing>")) +
                     "'");
  }
  if (manifest.at("vocab_fingerprint").get<std::string>() !=
      fingerprint_hex(vocabulary_fingerprint())) {
    throw ConfigError(
        "dataset was written against a different vocabulary; regenerate it");
  }

  Dataset ds;
  ds.dir_ = dir;
  const WorldConfig config = world_config_from_json(manifest.at("world"));
  auto world = std::make_shared<World>(config);
  if (fingerprint_hex(world->fingerprint()) !=
      manifest.at("world_fingerprint").get<std::string>()) {
    throw ConfigError(
        "reconstructed world does not match the dataset manifest "
        "fingerprint; the generator code and the data have diverged");
  }
  ds.world_ = world;

  const auto count = manifest.at("count").get<std::int64_t>();
  if (count < 1) throw InputError("dataset manifest reports an empty dataset");
  ds.samples_.reserve(count);

  for (std::int64_t id = 0; id < count; ++id) {
    const fs::path side_path = fs::path(dir) / (sample_stem(id) + ".json");
    std::ifstream side(side_path);
    if (!side) {
      throw InputError("missing sample sidecar: " + side_path.string());
    }
    json sidecar = json::parse(side);
    if (sidecar.at("id").get<std::int64_t>() != id) {
      throw InputError("sample sidecar id mismatch in " + side_path.string());
    }

    const fs::path tns_path = fs::path(dir) / (sample_stem(id) + ".tns");
    std::ifstream tns(tns_path, std::ios::binary);
    if (!tns) throw InputError("missing sample file: " + tns_path.string());

    PairedSample s;
    s.id = id;
    s.attributes = sidecar.at("attributes").get<std::vector<int>>();
    if (static_cast<int>(s.attributes.size()) != kNumAttributes) {
      throw InputError("sample " + std::to_string(id) + " carries " +
                       std::to_string(s.attributes.size()) +
                       " attributes, expected " +
                       std::to_string(kNumAttributes));
    }

    // Seek to each block through the sidecar offsets rather than scanning,
    // so the offsets stay honest.
    for (const auto& b : sidecar.at("blocks")) {
      const auto name = b.at("name").get<std::string>();
      const auto offset = b.at("offset").get<std::uint64_t>();
      tns.clear();
      tns.seekg(static_cast<std::streamoff>(offset));
      Tensor block = read_tns(tns);
      if (name == "latent") {
        s.latent = block.detach();
      } else if (name == "image") {
        s.image = block.detach();
      } else if (name.rfind("caption_", 0) == 0) {
        s.captions.push_back(caption_from_tensor(block));
      } else {
        throw InputError("unknown block '" + name + "' in " +
                         tns_path.string());
      }
    }
    if (s.latent.node() == nullptr || s.image.node() == nullptr ||
        s.captions.size() != static_cast<std::size_t>(kCaptionsPerSample)) {
      throw InputError("sample " + std::to_string(id) +
                       " is missing blocks (need latent, image, and " +
                       std::to_string(kCaptionsPerSample) + " captions)");
    }
    if (s.latent.rows() != config.latent_rows ||
        s.latent.cols() != config.latent_dim) {
      throw ShapeError("sample " + std::to_string(id) +
                       " latent shape disagrees with the manifest");
    }
    ds.samples_.push_back(std::move(s));
  }
  return ds;
}

const PairedSample& Dataset::sample(std::int64_t index) const {
  if (index < 0 || index >= size()) {
    throw InputError("sample index " + std::to_string(index) +
                     " out of range [0, " + std::to_string(size()) + ")");
  }
  return samples_[static_cast<std::size_t>(index)];
}

}  // namespace anyface
