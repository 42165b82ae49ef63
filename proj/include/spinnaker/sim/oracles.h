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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spinnaker/sim/history.h"
#include "spinnaker/sim/trace.h"

namespace spinnaker {

// ---- linearizability

struct LinearizabilityOptions {
  // Most operations that may be pending at one instant on a single cell.
  size_t max_concurrency = 8;
};

struct LinearizabilityResult {
  bool ok = true;
  std::string key;
  std::string column;
  // Op ids in a legal order for the cell (when ok).
  std::vector<uint64_t> witness;
  // The shortest failing prefix, less the reads and unanswered writes it
  // does not need (when not ok).
  std::vector<HistoryOp> counterexample;
};

// Checks the strong reads and all writes on one cell against a versioned
// register. Writes that may have been applied without an answer are free
// to take effect at any point after their invocation, or never.
Result<LinearizabilityResult> check_cell_linearizable(const std::vector<HistoryOp>& ops,
                                                       const LinearizabilityOptions& options = {});

struct LinearizabilityReport {
  size_t cells = 0;
  size_t ops = 0;
  size_t too_large = 0;
  std::vector<LinearizabilityResult> violations;
  bool ok() const { return violations.empty(); }
};

LinearizabilityReport check_linearizable(const History& history, const LinearizabilityOptions& options = {});

// Highest number of operations on one cell pending at the same instant.
size_t max_cell_concurrency(const std::vector<HistoryOp>& ops);

// ---- durability

struct SafetyReport {
  size_t acked = 0;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Every acknowledged write must be visible in the final strong reads: the
// cell's final version is at least the acknowledged one, and equal
// versions carry the written value.
SafetyReport check_acked_writes(const History& history);

// ---- timeline staleness

struct StalenessReport {
  size_t reads = 0;
  Tick max_staleness = 0;
  double mean_staleness = 0;
};

// Staleness of a timeline read: how long a newer version of the cell had
// already been committed by the leader when the read was served.
StalenessReport measure_staleness(const std::vector<TraceEvent>& events);

// ---- protocol accounting

struct AccountingReport {
  size_t writes = 0;
  // Per committed write.
  std::map<std::string, double> messages_per_write;  // by message type
  double forces_per_write = 0;
  double protocol_messages_per_write = 0;
  uint64_t data_path_coord_calls = 0;
  // Largest gap between the measured commit latency and one follower force
  // plus the two one-way delays on the first acknowledging path.
  Tick worst_critical_path_error = 0;
  std::vector<Tick> commit_latencies;
  std::vector<Tick> predicted_latencies;
};

// Per-write costs over the committed writes of a failure-free trace window.
AccountingReport account_writes(const std::vector<TraceEvent>& events, Tick from, Tick to, Tick force_ticks);

// ---- inline invariants

// Checks replicated-state invariants as trace records arrive: at most one
// leader per cohort and epoch, and every leader that commits an LSN commits
// the same write under it.
class InvariantChecker {
 public:
  void observe(const TraceEvent& e, size_t index);
  bool violated() const { return violation_.has_value(); }
  const std::optional<std::string>& violation() const { return violation_; }
  size_t violation_index() const { return index_; }

 private:
  std::map<std::pair<uint64_t, uint64_t>, std::string> elected_;
  std::map<std::pair<uint64_t, std::string>, std::string> committed_;
  std::optional<std::string> violation_;
  size_t index_ = 0;
};

}  // namespace spinnaker
