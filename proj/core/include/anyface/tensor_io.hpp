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
// TNS tensor container: a one-line ASCII header
//
//   TNS v1 <rank> <extent-0> ... <extent-(rank-1)>\n
//
// followed by the row-major payload as little-endian IEEE-754 float64.
// Blocks are self-delimiting, so several tensors may be concatenated in a
// single file and read back in order.

#ifndef ANYFACE_TENSOR_IO_HPP_
#define ANYFACE_TENSOR_IO_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "anyface/tensor.hpp"

namespace anyface {

void write_tns(std::ostream& os, const Tensor& t);
Tensor read_tns(std::istream& is);

// Whole-file helpers.  The multi-tensor variants concatenate blocks.
void save_tns(const std::string& path, const std::vector<Tensor>& tensors);
std::vector<Tensor> load_tns(const std::string& path);

// Byte offset bookkeeping for sidecar indexes: serializes `t` and returns
// the encoded size in bytes.
std::int64_t tns_encoded_size(const Tensor& t);

// FNV-1a 64-bit hash of a tensor's serialized bytes / of raw bytes; used to
// fingerprint frozen components.  Stable across platforms.
std::uint64_t fnv1a64(const void* bytes, std::size_t len,
                      std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t tensor_fingerprint(const Tensor& t);
std::uint64_t tensors_fingerprint(const std::vector<Tensor>& ts);
std::string fingerprint_hex(std::uint64_t h);

}  // namespace anyface

#endif  // ANYFACE_TENSOR_IO_HPP_
