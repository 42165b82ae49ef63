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
#include <string>
#include <vector>

#include "spinnaker/sim/scenario.h"

namespace spinnaker {

// ---- randomized fault schedules

struct FaultScheduleOptions {
  // Permanent disk losses allowed per cohort.
  int max_wipes_per_cohort = 1;
  Tick horizon = 26000;
};

// A scenario script with a random layout, workload and crash/restart/wipe
// sequence derived from `seed`.
std::string random_fault_schedule(uint64_t seed, const FaultScheduleOptions& options = {});

struct ScheduleOutcome {
  uint64_t seed = 0;
  std::string script;
  bool ok = true;
  std::vector<std::string> problems;
  size_t acked = 0;
  size_t lin_cells = 0;
  size_t lin_too_large = 0;
  uint64_t fingerprint = 0;
};

// Runs one generated schedule through the safety, linearizability and
// convergence oracles.
ScheduleOutcome run_fault_schedule(uint64_t seed, bool trace = false);

// ---- the three-node recovery walkthrough

struct ReplicaSnapshot {
  std::string host;
  bool up = false;
  bool leader = false;
  Lsn cmt;
  Lsn lst;
  bool operator==(const ReplicaSnapshot&) const = default;
};

struct GoldenStage {
  std::string name;
  std::vector<ReplicaSnapshot> nodes;
  uint32_t epoch = 0;
};

struct GoldenReport {
  std::vector<GoldenStage> stages;
  std::vector<std::string> mismatches;
  // Write LSNs the new leader re-proposed during takeover.
  std::vector<Lsn> reproposed;
  // Records shipped to the surviving old leader during takeover.
  size_t shipped_to_old_leader = 0;
  std::vector<Lsn> new_writes;
  std::vector<Lsn> truncated_on_c;
  std::vector<Lsn> caught_up_on_c;
  uint64_t fingerprint = 0;
  std::string trace;  // NDJSON
  bool ok() const { return mismatches.empty(); }
};

// Leader A with cmt 1.20 and followers B and C with cmt 1.10 all fail; A and
// B return and B takes over with epoch 2; nine new writes commit; C returns
// and catches up, dropping its uncommitted 1.22.
GoldenReport run_golden_walkthrough();
std::string format_golden(const GoldenReport& report);

// ---- recovery time against commit period

struct RecoveryMeasurement {
  Tick commit_period = 0;
  Tick write_interval = 0;
  Tick crash_at = 0;
  size_t reproposed = 0;
  // From the old leader's znode disappearing to the new leader accepting
  // writes. Failure detection is not included.
  Tick unavailability = 0;
  Tick detection = 0;
};

struct RecoveryBenchOptions {
  Tick write_interval = 20;  // zero disables the load
  size_t value_bytes = 1024;
  uint64_t bandwidth = 256;  // bytes per tick on every link
  Tick warmup = 6000;
  uint64_t seed = 1;
};

RecoveryMeasurement measure_recovery(Tick commit_period, const RecoveryBenchOptions& options = {});

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// ---- failure-free measurements

// Sequential writes on an idle cluster, one at a time.
AccountingReport run_accounting(uint64_t seed, int writes = 40);

// One writer and two timeline readers on the same cells.
StalenessReport run_staleness(uint64_t seed, bool piggyback, Tick commit_period = 1000);

// ---- availability with failed cohort members

struct AvailabilityCase {
  std::string pattern;
  int alive = 0;
  bool write_ok = false;
  bool strong_read_ok = false;
  bool timeline_read_ok = false;
  // What the quorum rules call for.
  bool expect_writes = false;
  bool ok() const;
};

std::vector<AvailabilityCase> run_availability_matrix(uint64_t seed = 1);

// ---- recovery idempotence

struct IdempotenceOutcome {
  uint64_t seed = 0;
  bool recover_twice_identical = false;
  bool crash_mid_catchup_identical = false;
  bool crashed_mid_catchup = false;
  std::string detail;
  bool ok() const { return recover_twice_identical && crash_mid_catchup_identical; }
};

IdempotenceOutcome run_idempotence(uint64_t seed);

}  // namespace spinnaker
