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

#include "spinnaker/common/bytes.h"

#include <zlib.h>

namespace spinnaker {

uint32_t crc32_of(std::span<const uint8_t> data, uint32_t seed) {
  return static_cast<uint32_t>(::crc32(seed, data.data(), static_cast<uInt>(data.size())));
}

}  // namespace spinnaker
