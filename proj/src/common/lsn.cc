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

#include "spinnaker/common/lsn.h"

#include <charconv>

namespace spinnaker {

std::string Lsn::to_string() const {
  return std::to_string(epoch) + "." + std::to_string(seq);
}

std::optional<Lsn> Lsn::parse(std::string_view text) {
  auto dot = text.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  uint32_t e = 0;
  uint64_t s = 0;
  auto head = text.substr(0, dot);
  auto tail = text.substr(dot + 1);
  auto r1 = std::from_chars(head.data(), head.data() + head.size(), e);
  auto r2 = std::from_chars(tail.data(), tail.data() + tail.size(), s);
  if (r1.ec != std::errc() || r1.ptr != head.data() + head.size()) return std::nullopt;
  if (r2.ec != std::errc() || r2.ptr != tail.data() + tail.size()) return std::nullopt;
  if (e > kMaxEpoch || s > kSeqMask) return std::nullopt;
  return Lsn(e, s);
}

}  // namespace spinnaker
