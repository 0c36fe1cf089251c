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

#include "anyface/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "anyface/errors.hpp"

namespace anyface {

namespace {

static_assert(sizeof(double) == 8, "float64 payload requires 8-byte double");

// The file format is little-endian; byte-swap on big-endian hosts.
constexpr bool kHostLittle = std::endian::native == std::endian::little;

std::uint64_t bswap64(std::uint64_t v) {
  v = ((v & 0x00000000ffffffffull) << 32) | (v >> 32);
  v = ((v & 0x0000ffff0000ffffull) << 16) | ((v >> 16) & 0x0000ffff0000ffffull);
  v = ((v & 0x00ff00ff00ff00ffull) << 8) | ((v >> 8) & 0x00ff00ff00ff00ffull);
  return v;
}

void encode_payload(const std::vector<double>& data, std::string& out) {
  const std::size_t n = data.size() * sizeof(double);
  const std::size_t base = out.size();
  out.resize(base + n);
  std::memcpy(out.data() + base, data.data(), n);
  if constexpr (!kHostLittle) {
    auto* words = reinterpret_cast<std::uint64_t*>(out.data() + base);
    for (std::size_t i = 0; i < data.size(); ++i) words[i] = bswap64(words[i]);
  }
}

}  // namespace

void write_tns(std::ostream& os, const Tensor& t) {
  std::ostringstream header;
  header << "TNS v1 " << t.rank();
  for (auto e : t.shape()) header << " " << e;
  header << "\n";
  std::string buf = header.str();
  encode_payload(t.data(), buf);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw InputError("write_tns: stream write failed");
}

Tensor read_tns(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) {
    throw InputError("read_tns: missing header line");
  }
  std::istringstream hs(line);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != "TNS" || version != "v1") {
    throw InputError("read_tns: bad header '" + line + "'");
  }
  std::int64_t rank = 0;
  if (!(hs >> rank) || rank < 1 || rank > 8) {
    throw InputError("read_tns: invalid rank in header '" + line + "'");
  }
  Shape shape(static_cast<std::size_t>(rank));
  std::int64_t numel = 1;
  for (auto& e : shape) {
    if (!(hs >> e) || e <= 0) {
      throw InputError("read_tns: invalid extents in header '" + line + "'");
    }
    numel *= e;
  }
  std::vector<double> data(static_cast<std::size_t>(numel));
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (is.gcount() !=
      static_cast<std::streamsize>(data.size() * sizeof(double))) {
    throw InputError("read_tns: truncated payload");
  }
  if constexpr (!kHostLittle) {
    auto* words = reinterpret_cast<std::uint64_t*>(data.data());
    for (std::size_t i = 0; i < data.size(); ++i) words[i] = bswap64(words[i]);
  }
  return Tensor::from_data(std::move(shape), std::move(data));
}

void save_tns(const std::string& path, const std::vector<Tensor>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("save_tns: cannot open '" + path + "' for write");
  for (const auto& t : tensors) write_tns(os, t);
}

std::vector<Tensor> load_tns(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("load_tns: cannot open '" + path + "'");
  std::vector<Tensor> out;
  while (is.peek() != std::char_traits<char>::eof()) {
    out.push_back(read_tns(is));
  }
  return out;
}

std::int64_t tns_encoded_size(const Tensor& t) {
  std::ostringstream os;
  write_tns(os, t);
  return static_cast<std::int64_t>(os.str().size());
}

std::uint64_t fnv1a64(const void* bytes, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t tensor_fingerprint(const Tensor& t) {
  std::ostringstream os;
  write_tns(os, t);
  const std::string s = os.str();
  return fnv1a64(s.data(), s.size());
}

std::uint64_t tensors_fingerprint(const std::vector<Tensor>& ts) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& t : ts) {
    std::ostringstream os;
    write_tns(os, t);
    const std::string s = os.str();
    h = fnv1a64(s.data(), s.size(), h);
  }
  return h;
}

std::string fingerprint_hex(std::uint64_t h) {
  static const char* hex = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return s;
}

}  // namespace anyface
