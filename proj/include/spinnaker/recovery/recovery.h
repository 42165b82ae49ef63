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

#include <optional>
#include <vector>

#include "spinnaker/common/lsn.h"
#include "spinnaker/common/write_op.h"
#include "spinnaker/wal/sim_disk.h"
#include "spinnaker/wal/wal.h"

namespace spinnaker {

enum class RecoveryPhase { kLocalRecovery, kCatchUp, kDone };

struct RecoveryState {
  RecoveryPhase phase = RecoveryPhase::kLocalRecovery;
  Lsn committed;
  Lsn last;
  std::vector<Lsn> ambiguous;  // (committed, last], never applied locally
  size_t replayed = 0;
};

// Durable per-cohort replica metadata. `log_epoch` is the newest epoch
// whose leader history this replica's log has been reconciled with; a
// replica without metadata (fresh or wiped disk) may not vote.
std::optional<uint32_t> load_log_epoch(const SimDisk& disk, CohortId cohort);
void store_log_epoch(SimDisk& disk, CohortId cohort, uint32_t log_epoch);

// Greatest last-committed marker of `cohort` in a log scan.
Lsn last_committed_marker(const Wal::ScanResult& scan, CohortId cohort);

}  // namespace spinnaker
