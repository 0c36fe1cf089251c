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

#include "anyface/vocab.hpp"

#include <unordered_map>

#include "anyface/errors.hpp"
#include "anyface/tensor_io.hpp"

namespace anyface {

namespace {

struct AttributeWords {
  const char* name;
  const char* positive[kSynonymsPerPolarity];
  const char* negative[kSynonymsPerPolarity];
};

constexpr AttributeWords kAttributeTable[kNumAttributes] = {
    {"smile", {"smiling", "grinning"}, {"unsmiling", "frowning"}},
    {"wavy-hair", {"wavy-hair", "curly-hair"}, {"straight-hair", "flat-hair"}},
    {"long-hair", {"long-hair", "flowing-hair"}, {"short-hair", "cropped-hair"}},
    {"dark-hair", {"dark-hair", "black-hair"}, {"light-hair", "blond-hair"}},
    {"glasses", {"glasses", "spectacles"}, {"no-glasses", "bare-eyed"}},
    {"beard", {"bearded", "stubbled"}, {"shaven", "beardless"}},
    {"makeup", {"makeup", "lipstick"}, {"no-makeup", "plain-faced"}},
    {"young", {"young", "youthful"}, {"old", "elderly"}},
    {"pale-skin", {"pale-skin", "fair-skin"}, {"tan-skin", "bronzed-skin"}},
    {"big-eyes", {"big-eyes", "wide-eyes"}, {"small-eyes", "narrow-eyes"}},
    {"round-face", {"round-face", "full-face"}, {"slim-face", "angular-face"}},
    {"earrings", {"earrings", "ear-studs"}, {"no-earrings", "unadorned"}},
};

std::vector<std::string> build_vocabulary() {
  std::vector<std::string> words;
  words.reserve(kVocabSize);
  for (const auto& attr : kAttributeTable) {
    for (int s = 0; s < kSynonymsPerPolarity; ++s)
      words.emplace_back(attr.positive[s]);
    for (int s = 0; s < kSynonymsPerPolarity; ++s)
      words.emplace_back(attr.negative[s]);
  }
  return words;
}

}  // namespace

const std::vector<std::string>& attribute_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    out.reserve(kNumAttributes);
    for (const auto& attr : kAttributeTable) out.emplace_back(attr.name);
    return out;
  }();
  return names;
}

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = build_vocabulary();
  return words;
}

int token_id(const std::string& word) {
  static const std::unordered_map<std::string, int> index = [] {
    std::unordered_map<std::string, int> m;
    const auto& words = vocabulary();
    for (int i = 0; i < static_cast<int>(words.size()); ++i) m[words[i]] = i;
    return m;
  }();
  auto it = index.find(word);
  if (it == index.end()) {
    throw InputError("unknown vocabulary token '" + word + "'");
  }
  return it->second;
}

int token_attribute(int token) {
  if (token < 0 || token >= kVocabSize) {
    throw InputError("token id out of range: " + std::to_string(token));
  }
  return token / kTokensPerAttribute;
}

bool token_positive(int token) {
  if (token < 0 || token >= kVocabSize) {
    throw InputError("token id out of range: " + std::to_string(token));
  }
  return token % kTokensPerAttribute < kSynonymsPerPolarity;
}

int make_token(int attribute, bool present, int synonym) {
  if (attribute < 0 || attribute >= kNumAttributes || synonym < 0 ||
      synonym >= kSynonymsPerPolarity) {
    throw InputError("make_token: argument out of range");
  }
  return attribute * kTokensPerAttribute +
         (present ? 0 : kSynonymsPerPolarity) + synonym;
}

std::uint64_t vocabulary_fingerprint() {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& w : vocabulary()) {
    h = fnv1a64(w.data(), w.size(), h);
    h = fnv1a64("\x1f", 1, h);  // separator
  }
  return h;
}

}  // namespace anyface
