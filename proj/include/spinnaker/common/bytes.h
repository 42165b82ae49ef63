// Copyright 2026 The Spinnaker Replication Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spinnaker {

using Bytes = std::vector<uint8_t>;

// Little-endian append-only encoder.
class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(Bytes* out) : out_(out) {}

  void put_u8(uint8_t v) { buf().push_back(v); }
  void put_u16(uint16_t v) { put_fixed(v); }
  void put_u32(uint32_t v) { put_fixed(v); }
  void put_u64(uint64_t v) { put_fixed(v); }
  void put_bytes(std::span<const uint8_t> data) {
    buf().insert(buf().end(), data.begin(), data.end());
  }
  // u32 length prefix followed by the raw bytes.
  void put_string(std::string_view s) {
    put_u32(static_cast<uint32_t>(s.size()));
    buf().insert(buf().end(), s.begin(), s.end());
  }

  size_t size() const { return out_ ? out_->size() : own_.size(); }
  Bytes& buf() { return out_ ? *out_ : own_; }
  Bytes take() { return std::move(own_); }

  // Overwrites a previously written u32 (used to backpatch lengths).
  void patch_u32(size_t offset, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf()[offset + i] = static_cast<uint8_t>(v >> (8 * i));
  }

 private:
  template <typename T>
  void put_fixed(T v) {
    for (size_t i = 0; i < sizeof(T); ++i) buf().push_back(static_cast<uint8_t>(v >> (8 * i)));
  }

  Bytes own_;
  Bytes* out_ = nullptr;
};

// Bounds-checked little-endian decoder. Any overrun latches `ok() == false`
// and subsequent reads return zero values.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

  uint8_t get_u8() { return get_fixed<uint8_t>(); }
  uint16_t get_u16() { return get_fixed<uint16_t>(); }
  uint32_t get_u32() { return get_fixed<uint32_t>(); }
  uint64_t get_u64() { return get_fixed<uint64_t>(); }

  std::string get_string() {
    uint32_t n = get_u32();
    if (!ok_ || remaining() < n) {
      ok_ = false;
      return {};
    }
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::span<const uint8_t> get_span(size_t n) {
    if (!ok_ || remaining() < n) {
      ok_ = false;
      return {};
    }
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  size_t remaining() const { return data_.size() - pos_; }
  size_t position() const { return pos_; }
  bool ok() const { return ok_; }
  bool done() const { return ok_ && pos_ == data_.size(); }

 private:
  template <typename T>
  T get_fixed() {
    if (!ok_ || remaining() < sizeof(T)) {
      ok_ = false;
      return 0;
    }
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(data_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
  bool ok_ = true;
};

uint32_t crc32_of(std::span<const uint8_t> data, uint32_t seed = 0);

}  // namespace spinnaker
