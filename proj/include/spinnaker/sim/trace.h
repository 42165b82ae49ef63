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
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "spinnaker/common/event_queue.h"
#include "spinnaker/common/status.h"
#include "spinnaker/common/trace_sink.h"

namespace spinnaker {

inline constexpr int kTraceSchemaVersion = 1;

struct TraceEvent {
  Tick tick = 0;
  std::string component;
  std::string kind;
  nlohmann::json fields;
};

// In-memory trace stamped with simulated time. Written out as
// newline-delimited JSON behind a one-line schema header.
class TraceRecorder final : public TraceSink {
 public:
  explicit TraceRecorder(const Scheduler& clock, bool enabled = true) : clock_(clock), enabled_(enabled) {}

  void record(std::string_view component, std::string_view kind, nlohmann::json fields) override;

  // Sees every record, kept or not, with its position in the stream.
  using Observer = std::function<void(const TraceEvent&, size_t index)>;
  void set_observer(Observer fn) { observer_ = std::move(fn); }
  size_t recorded() const { return recorded_; }

  bool enabled() const { return enabled_; }
  void set_enabled(bool e) { enabled_ = e; }
  const std::vector<TraceEvent>& events() const { return events_; }
  void clear() { events_.clear(); }

  static std::string header_line();
  static std::string event_line(const TraceEvent& e);
  void write_ndjson(std::ostream& out) const;
  // FNV-1a over the NDJSON encoding.
  uint64_t fingerprint() const;

 private:
  const Scheduler& clock_;
  bool enabled_;
  Observer observer_;
  size_t recorded_ = 0;
  std::vector<TraceEvent> events_;
};

// Reads a trace written by write_ndjson.
Result<std::vector<TraceEvent>> read_ndjson(std::istream& in);

}  // namespace spinnaker
