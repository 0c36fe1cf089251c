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
// The caption vocabulary.  Faces carry k = 12 binary attributes; each
// attribute contributes two synonym tokens per polarity, so the vocabulary
// holds k * 4 = 48 words.  Token ids are laid out as
//
//   id = attribute * 4 + polarity * 2 + synonym
//
// with polarity 0 = attribute present, 1 = absent.

#ifndef ANYFACE_VOCAB_HPP_
#define ANYFACE_VOCAB_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace anyface {

inline constexpr int kNumAttributes = 12;
inline constexpr int kSynonymsPerPolarity = 2;
inline constexpr int kTokensPerAttribute = 2 * kSynonymsPerPolarity;
inline constexpr int kVocabSize = kNumAttributes * kTokensPerAttribute;

// Human-readable attribute names, indexed by attribute.
const std::vector<std::string>& attribute_names();

// All vocabulary words, indexed by token id.
const std::vector<std::string>& vocabulary();

// Token id for a vocabulary word; throws InputError on unknown words.
int token_id(const std::string& word);

// Attribute index / polarity encoded in a token id.
int token_attribute(int token);
bool token_positive(int token);

// Token id for (attribute, present, synonym).
int make_token(int attribute, bool present, int synonym);

// FNV-1a fingerprint of the whole vocabulary; artifacts record it so that
// mismatched encoder/dataset pairs are rejected early.
std::uint64_t vocabulary_fingerprint();

}  // namespace anyface

#endif  // ANYFACE_VOCAB_HPP_
