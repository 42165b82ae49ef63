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

#include <string_view>

#include <nlohmann/json.hpp>

namespace spinnaker {

// Structured event sink. Components report what they did; the simulator
// stamps each record with the current tick.
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void record(std::string_view component, std::string_view kind, nlohmann::json fields) = 0;
};

class NullTrace final : public TraceSink {
 public:
  void record(std::string_view, std::string_view, nlohmann::json) override {}
  static NullTrace& instance() {
    static NullTrace t;
    return t;
  }
};

}  // namespace spinnaker
