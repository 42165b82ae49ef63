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

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace spinnaker {

// Log sequence number. The epoch lives in the high 16 bits of the packed
// form and the sequence number in the low 48, so comparing packed values
// is the same as comparing (epoch, seq) lexicographically.
struct Lsn {
  static constexpr int kSeqBits = 48;
  static constexpr uint64_t kSeqMask = (uint64_t{1} << kSeqBits) - 1;
  static constexpr uint32_t kMaxEpoch = 0xFFFF;

  uint32_t epoch = 0;
  uint64_t seq = 0;

  constexpr Lsn() = default;
  constexpr Lsn(uint32_t e, uint64_t s) : epoch(e), seq(s) {}

  constexpr uint64_t encode() const {
    return (static_cast<uint64_t>(epoch) << kSeqBits) | (seq & kSeqMask);
  }
  static constexpr Lsn decode(uint64_t packed) {
    return Lsn(static_cast<uint32_t>(packed >> kSeqBits), packed & kSeqMask);
  }

  constexpr bool is_zero() const { return epoch == 0 && seq == 0; }

  // Next LSN in the same epoch.
  constexpr Lsn next() const { return Lsn(epoch, seq + 1); }

  static constexpr Lsn max() { return Lsn(kMaxEpoch, kSeqMask); }

  constexpr auto operator<=>(const Lsn&) const = default;

  // "e.seq", e.g. "1.20".
  std::string to_string() const;
  static std::optional<Lsn> parse(std::string_view text);
};

}  // namespace spinnaker

template <>
struct std::hash<spinnaker::Lsn> {
  size_t operator()(const spinnaker::Lsn& l) const noexcept {
    return std::hash<uint64_t>()(l.encode());
  }
};
