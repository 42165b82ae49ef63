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

#include "spinnaker/sim/trace.h"

#include <istream>
#include <sstream>

namespace spinnaker {

void TraceRecorder::record(std::string_view component, std::string_view kind, nlohmann::json fields) {
  if (!enabled_ && !observer_) return;
  TraceEvent e{clock_.now(), std::string(component), std::string(kind), std::move(fields)};
  if (observer_) observer_(e, recorded_);
  ++recorded_;
  if (enabled_) events_.push_back(std::move(e));
}

std::string TraceRecorder::header_line() {
  return nlohmann::json{{"schema", "spinnaker-trace"}, {"version", kTraceSchemaVersion}}.dump();
}

std::string TraceRecorder::event_line(const TraceEvent& e) {
  nlohmann::json j = {{"tick", e.tick}, {"component", e.component}, {"kind", e.kind}, {"fields", e.fields}};
  return j.dump();
}

void TraceRecorder::write_ndjson(std::ostream& out) const {
  out << header_line() << '\n';
  for (const auto& e : events_) out << event_line(e) << '\n';
}

uint64_t TraceRecorder::fingerprint() const {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= '\n';
    h *= 1099511628211ull;
  };
  mix(header_line());
  for (const auto& e : events_) mix(event_line(e));
  return h;
}

Result<std::vector<TraceEvent>> read_ndjson(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return make_error(Code::kParseError, "empty trace");
  try {
    auto header = nlohmann::json::parse(line);
    if (header.value("schema", "") != "spinnaker-trace") return make_error(Code::kParseError, "not a trace file");
    if (header.value("version", 0) != kTraceSchemaVersion) {
      return make_error(Code::kParseError, "unsupported trace version");
    }
    std::vector<TraceEvent> out;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line);
      out.push_back(TraceEvent{j.at("tick").get<Tick>(), j.at("component").get<std::string>(),
                               j.at("kind").get<std::string>(), j.at("fields")});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    return make_error(Code::kParseError, e.what());
  }
}

}  // namespace spinnaker
