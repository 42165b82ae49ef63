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

#include <algorithm>

#include "spinnaker/recovery/recovery.h"
#include "spinnaker/replication/replica.h"

namespace spinnaker {

namespace {
std::string meta_blob(CohortId cohort) { return "meta/" + std::to_string(cohort); }
}  // namespace

std::optional<uint32_t> load_log_epoch(const SimDisk& disk, CohortId cohort) {
  auto blob = disk.get_blob(meta_blob(cohort));
  if (!blob) return std::nullopt;
  ByteReader r(*blob);
  const uint32_t e = r.get_u32();
  if (!r.ok()) return std::nullopt;
  return e;
}

void store_log_epoch(SimDisk& disk, CohortId cohort, uint32_t log_epoch) {
  ByteWriter w;
  w.put_u32(log_epoch);
  disk.put_blob(meta_blob(cohort), w.take());
}

Lsn last_committed_marker(const Wal::ScanResult& scan, CohortId cohort) {
  Lsn out;
  for (const auto& rec : scan.records) {
    if (rec.cohort == cohort && !rec.is_write()) out = std::max(out, rec.lsn);
  }
  return out;
}

RecoveryState CohortReplica::recover_local(const Wal::ScanResult& scan) {
  RecoveryState st;
  store_.load();
  const auto le = load_log_epoch(*env_.disk, cohort_);
  voter_ = le.has_value();
  log_epoch_ = le.value_or(0);
  epoch_ = log_epoch_;
  Wal& wal = *env_.wal;
  cmt_ = std::max({last_committed_marker(scan, cohort_), store_.checkpoint_lsn(), wal.reclaimed_through(cohort_)});
  auto records = wal.read_from(cohort_, store_.checkpoint_lsn());
  if (records) {
    for (const auto& rec : *records) {
      if (rec.lsn <= cmt_) {
        store_.apply_write(rec.op, rec.lsn);
        ++st.replayed;
      } else {
        st.ambiguous.push_back(rec.lsn);
      }
    }
  }
  durable_ = last();
  st.committed = cmt_;
  st.last = last();
  st.phase = RecoveryPhase::kCatchUp;
  std::vector<std::string> amb;
  for (const auto& l : st.ambiguous) amb.push_back(l.to_string());
  trace("local_recovery", {{"cmt", cmt_.to_string()},
                           {"lst", st.last.to_string()},
                           {"checkpoint", store_.checkpoint_lsn().to_string()},
                           {"replayed", st.replayed},
                           {"ambiguous", amb},
                           {"voter", voter_},
                           {"log_epoch", log_epoch_}});
  return st;
}

}  // namespace spinnaker
