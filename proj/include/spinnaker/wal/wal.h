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
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "spinnaker/common/event_queue.h"
#include "spinnaker/common/status.h"
#include "spinnaker/common/trace_sink.h"
#include "spinnaker/common/write_op.h"
#include "spinnaker/wal/sim_disk.h"

namespace spinnaker {

enum class RecordType : uint8_t {
  kWrite = 1,
  kLastCommitted = 2,
};

// One durable log unit. For a last-committed marker `lsn` is the committed
// LSN being recorded and `op` is unused.
struct LogRecord {
  CohortId cohort = 0;
  Lsn lsn;
  RecordType type = RecordType::kWrite;
  WriteOp op;

  static LogRecord write(CohortId cohort, Lsn lsn, WriteOp op) {
    return LogRecord{cohort, lsn, RecordType::kWrite, std::move(op)};
  }
  static LogRecord marker(CohortId cohort, Lsn committed) {
    return LogRecord{cohort, committed, RecordType::kLastCommitted, {}};
  }
  bool is_write() const { return type == RecordType::kWrite; }

  bool operator==(const LogRecord&) const = default;
};

// Record header: cohort 4B, LSN 8B, body length 4B, checksum 4B.
inline constexpr size_t kRecordHeaderBytes = 20;

void encode_record(ByteWriter& w, const LogRecord& rec);
// Decodes one record at the reader's position. Returns nullopt on a short
// read or checksum mismatch (torn or corrupt tail).
std::optional<LogRecord> decode_record(ByteReader& r);

struct WalOptions {
  size_t segment_bytes = size_t{4} << 20;
  Tick group_commit_window = 1;
  Tick force_base_ticks = 10;
  // Device bandwidth; zero makes force latency independent of size.
  uint64_t disk_bytes_per_tick = 0;
};

// Shared write-ahead log of one node. All cohorts hosted on the node append
// into the same physical stream; each cohort has its own logical LSN stream.
class Wal {
 public:
  using DurableCallback = std::function<void(Status)>;

  struct ScanResult {
    std::vector<LogRecord> records;  // physical order, markers included
    bool corrupt = false;            // the scan stopped at a bad record
  };

  Wal(SimDisk& disk, Scheduler& sched, WalOptions options, TraceSink* trace = nullptr,
      std::string owner = "wal");
  Wal(const Wal&) = delete;
  Wal& operator=(const Wal&) = delete;

  // Loads durable state with one pass over the log. Must run before any
  // append. A checksum failure truncates the log at the last good record.
  ScanResult open();

  // Appends write records and forces them. `done` runs once every record is
  // durable; concurrent calls may share one physical force. An empty batch
  // is a barrier: `done` runs once everything appended so far is durable.
  Status append_forced(std::span<const LogRecord> records, DurableCallback done);
  Status append_forced(const LogRecord& record, DurableCallback done) {
    return append_forced(std::span<const LogRecord>(&record, 1), std::move(done));
  }

  // Buffers a last-committed marker; it becomes durable with the next force.
  Status append_non_forced(const LogRecord& marker);

  // Write records of `cohort` with LSN > after, in LSN order, skipping
  // logically truncated LSNs. Fails with kSegmentRolledOver when part of
  // the range was reclaimed; the message carries the first available LSN.
  Result<std::vector<LogRecord>> read_from(CohortId cohort, Lsn after) const;

  Status logical_truncate(CohortId cohort, const std::set<Lsn>& skipped);
  Status roll_over(CohortId cohort, Lsn up_to);

  bool contains(CohortId cohort, Lsn lsn) const;
  const LogRecord* find(CohortId cohort, Lsn lsn) const;
  // Greatest write LSN physically present, skipped or not.
  Lsn stream_tail(CohortId cohort) const;
  // Greatest write LSN that is not logically truncated.
  Lsn last_lsn(CohortId cohort) const;
  const std::set<Lsn>& skipped(CohortId cohort) const;
  Lsn reclaimed_through(CohortId cohort) const;

  // First surviving LSN after a reclaimed prefix (for SegmentRolledOver).
  Lsn first_available(CohortId cohort) const;

  uint64_t force_requests() const { return force_requests_; }
  uint64_t physical_forces() const { return physical_forces_; }
  size_t segment_count() const { return segments_.size(); }
  bool force_in_flight() const { return in_flight_; }

  // Bytes handed to the device by the force currently in progress, by
  // segment. Used to model torn writes when the node crashes mid-force.
  const std::vector<std::pair<uint64_t, Bytes>>& in_flight_chunks() const { return in_flight_chunks_; }

 private:
  struct SegmentInfo {
    size_t size = 0;
    std::map<CohortId, Lsn> max_lsn;  // writes and markers
    std::map<CohortId, Lsn> max_write_lsn;
  };
  struct PendingRequest {
    DurableCallback done;
  };

  Status check_usable() const;
  void enqueue(const LogRecord& rec);
  void maybe_start_force();
  void start_force();
  void finish_force(std::vector<std::pair<uint64_t, Bytes>> chunks,
                    std::vector<PendingRequest> requests, size_t bytes, size_t records, Tick started);
  void persist_watermarks();
  void load_watermarks();
  void load_skipped();
  void persist_skipped(CohortId cohort);
  std::string skipped_blob(CohortId cohort) const;

  SimDisk& disk_;
  Scheduler& sched_;
  WalOptions options_;
  TraceSink* trace_;
  std::string owner_;

  // Index of write records by cohort.
  std::map<CohortId, std::map<Lsn, LogRecord>> writes_;
  std::map<CohortId, Lsn> tail_;
  std::map<CohortId, std::set<Lsn>> skipped_;
  std::map<CohortId, Lsn> watermark_;
  std::map<CohortId, Lsn> reclaimed_;
  std::map<uint64_t, SegmentInfo> segments_;
  // Where each write record lives, for reclaim.
  std::map<CohortId, std::map<Lsn, uint64_t>> segment_of_;

  uint64_t active_segment_ = 0;
  std::vector<std::pair<uint64_t, Bytes>> buffer_;  // not yet handed to a force
  size_t buffer_records_ = 0;
  std::vector<PendingRequest> waiting_;             // requests covered by the next force
  std::vector<std::pair<uint64_t, Bytes>> in_flight_chunks_;
  bool in_flight_ = false;
  bool start_scheduled_ = false;
  uint64_t force_requests_ = 0;
  uint64_t physical_forces_ = 0;
  uint64_t lowest_pending_segment_ = UINT64_MAX;
};

}  // namespace spinnaker
