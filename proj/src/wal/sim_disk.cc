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

#include "spinnaker/wal/sim_disk.h"

namespace spinnaker {

void SimDisk::append_segment(uint64_t segment, std::span<const uint8_t> bytes) {
  auto& s = segments_[segment];
  s.insert(s.end(), bytes.begin(), bytes.end());
}

void SimDisk::truncate_segment(uint64_t segment, size_t size) {
  auto it = segments_.find(segment);
  if (it == segments_.end()) return;
  if (size == 0) {
    segments_.erase(it);
  } else if (it->second.size() > size) {
    it->second.resize(size);
  }
}

std::optional<Bytes> SimDisk::get_blob(const std::string& name) const {
  auto it = blobs_.find(name);
  if (it == blobs_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> SimDisk::blob_names(const std::string& prefix) const {
  std::vector<std::string> out;
  for (auto it = blobs_.lower_bound(prefix); it != blobs_.end() && it->first.starts_with(prefix); ++it) {
    out.push_back(it->first);
  }
  return out;
}

void SimDisk::wipe() {
  segments_.clear();
  blobs_.clear();
  failed_ = false;
}

uint64_t SimDisk::fingerprint() const {
  // FNV-1a over the ordered contents.
  uint64_t h = 1469598103934665603ull;
  auto mix = [&](const uint8_t* p, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& [id, bytes] : segments_) {
    mix(reinterpret_cast<const uint8_t*>(&id), sizeof(id));
    mix(bytes.data(), bytes.size());
  }
  for (const auto& [name, bytes] : blobs_) {
    mix(reinterpret_cast<const uint8_t*>(name.data()), name.size());
    mix(bytes.data(), bytes.size());
  }
  return h;
}

}  // namespace spinnaker
