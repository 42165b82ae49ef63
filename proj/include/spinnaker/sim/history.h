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
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "spinnaker/sim/cluster.h"

namespace spinnaker {

// One client operation as the client saw it.
struct HistoryOp {
  uint64_t id = 0;
  NodeId client = 0;
  ClientOp op = ClientOp::kGet;
  std::string key;
  std::string column;
  bool consistent = true;
  // Written value for writes; value read for gets.
  std::optional<std::string> value;
  uint64_t expected_version = 0;
  // Version produced by a write, or observed by a read.
  uint64_t version = 0;
  Tick invoked = 0;
  std::optional<Tick> completed;
  Code code = Code::kOk;
  bool indeterminate = false;
  // Issued after the run quiesced to collect the final state.
  bool final_read = false;

  bool is_write() const { return op != ClientOp::kGet; }
  // A write that may have taken effect without the client learning of it.
  bool maybe_applied() const {
    return is_write() && (!completed || indeterminate || (code != Code::kOk && code != Code::kConditionCheckFailed));
  }
  bool acked() const { return is_write() && completed && !indeterminate && code == Code::kOk; }
};

class History {
 public:
  History(TraceSink* trace = nullptr) : trace_(trace ? trace : &NullTrace::instance()) {}

  uint64_t begin(NodeId client, const ClientCall& call, Tick now, bool final_read = false);
  void end(uint64_t id, const ClientResult& r, Tick now);
  const std::vector<HistoryOp>& ops() const { return ops_; }
  std::vector<HistoryOp>& ops() { return ops_; }
  void add(HistoryOp op) { ops_.push_back(std::move(op)); }

  // Rebuilds a history from the op_begin / op_end records of a trace.
  static History from_trace(const std::vector<TraceEvent>& events);

 private:
  TraceSink* trace_;
  std::vector<HistoryOp> ops_;
};

// Closed-loop client load: each client issues its next call a think time
// after the previous one completes. Written values are unique per run.
struct WorkloadSpec {
  std::vector<std::string> keys = {"100"};
  std::vector<std::string> columns = {"c"};
  int ops = 20;
  double reads = 0.3;     // strong gets
  double timeline = 0.0;  // timeline gets
  double cput = 0.1;
  double del = 0.05;
  Tick think = 20;
  Tick start = 0;
  size_t value_bytes = 0;  // pad values to this size

  // "keys=100,150 ops=40 reads=0.3 ..." with any subset of fields.
  static Result<WorkloadSpec> parse(std::string_view text);
};

class Workload {
 public:
  Workload(SimCluster& cluster, History& history, uint64_t seed) : cluster_(cluster), history_(history), seed_(seed) {}

  void add_clients(int count, const WorkloadSpec& spec);
  bool finished() const { return running_ == 0; }

 private:
  struct Driver {
    Client* client = nullptr;
    WorkloadSpec spec;
    std::mt19937_64 rng;
    int issued = 0;
    // Last version this client saw per cell, used for conditional writes.
    std::map<CellKey, uint64_t> seen;
  };

  void next(size_t d);

  SimCluster& cluster_;
  History& history_;
  uint64_t seed_;
  std::vector<std::unique_ptr<Driver>> drivers_;
  size_t running_ = 0;
  uint64_t values_ = 0;
};

}  // namespace spinnaker
