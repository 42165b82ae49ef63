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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spinnaker/common/bytes.h"

namespace spinnaker {

// Durable storage of one simulated node. Survives node crashes; only
// wipe() destroys it. Log segments and named blobs (SSTables, manifests,
// skipped-LSN sidecars, metadata) are kept separately so the log can be
// rolled over segment by segment.
class SimDisk {
 public:
  // Log segments.
  void append_segment(uint64_t segment, std::span<const uint8_t> bytes);
  void truncate_segment(uint64_t segment, size_t size);
  void drop_segment(uint64_t segment) { segments_.erase(segment); }
  const std::map<uint64_t, Bytes>& segments() const { return segments_; }

  // Named blobs; each put is atomic and durable on return.
  void put_blob(const std::string& name, Bytes bytes) { blobs_[name] = std::move(bytes); }
  std::optional<Bytes> get_blob(const std::string& name) const;
  void erase_blob(const std::string& name) { blobs_.erase(name); }
  std::vector<std::string> blob_names(const std::string& prefix) const;

  void wipe();
  bool failed() const { return failed_; }
  void set_failed(bool f) { failed_ = f; }

  void note_physical_force() { ++physical_forces_; }
  uint64_t physical_forces() const { return physical_forces_; }

  // Deterministic fingerprint of everything durable.
  uint64_t fingerprint() const;

 private:
  std::map<uint64_t, Bytes> segments_;
  std::map<std::string, Bytes> blobs_;
  bool failed_ = false;
  uint64_t physical_forces_ = 0;
};

}  // namespace spinnaker
