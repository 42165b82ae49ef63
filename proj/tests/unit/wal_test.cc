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

#include <gtest/gtest.h>

#include <memory>
#include <random>

#include "spinnaker/wal/wal.h"

namespace spinnaker {
namespace {

constexpr CohortId kR = 7;

LogRecord write_rec(CohortId c, Lsn l, const std::string& v = "v") {
  return LogRecord::write(c, l, WriteOp::put("k" + l.to_string(), "c", v));
}

// One incarnation of a node's log. Dropping it models a crash: queued
// completions die with the queue and never run.
struct Incarnation {
  explicit Incarnation(SimDisk& disk, WalOptions opts = {}) : wal(disk, queue, opts) { scan = wal.open(); }
  EventQueue queue;
  Wal wal;
  Wal::ScanResult scan;
};

std::vector<Lsn> lsns_of(const std::vector<LogRecord>& recs) {
  std::vector<Lsn> out;
  for (const auto& r : recs) out.push_back(r.lsn);
  return out;
}

std::vector<Lsn> range(uint32_t epoch, uint64_t from, uint64_t to) {
  std::vector<Lsn> out;
  for (uint64_t s = from; s <= to; ++s) out.emplace_back(epoch, s);
  return out;
}

TEST(Wal, FirstRecordDurable) {
  SimDisk disk;
  {
    Incarnation n(disk);
    bool done = false;
    ASSERT_TRUE(n.wal.append_forced(write_rec(kR, {1, 1}), [&](Status s) { done = s.is_ok(); }));
    n.queue.run_all();
    EXPECT_TRUE(done);
  }
  Incarnation n(disk);
  auto recs = n.wal.read_from(kR, Lsn());
  ASSERT_TRUE(recs);
  EXPECT_EQ(lsns_of(*recs), (std::vector<Lsn>{{1, 1}}));
  EXPECT_EQ(recs->front().op, WriteOp::put("k1.1", "c", "v"));
}

TEST(Wal, ReadFromAfterFigureTenNodeA) {
  SimDisk disk;
  Incarnation n(disk);
  for (const Lsn& l : range(1, 10, 21)) ASSERT_TRUE(n.wal.append_forced(write_rec(kR, l), nullptr));
  n.queue.run_all();
  auto recs = n.wal.read_from(kR, Lsn(1, 10));
  ASSERT_TRUE(recs);
  EXPECT_EQ(lsns_of(*recs), range(1, 11, 21));
  EXPECT_EQ(n.wal.last_lsn(kR), Lsn(1, 21));
}

TEST(Wal, ReadFromAfterTailIsEmpty) {
  SimDisk disk;
  Incarnation n(disk);
  for (const Lsn& l : range(1, 1, 5)) ASSERT_TRUE(n.wal.append_forced(write_rec(kR, l), nullptr));
  n.queue.run_all();
  EXPECT_TRUE(n.wal.read_from(kR, Lsn(1, 5))->empty());
  EXPECT_TRUE(n.wal.read_from(kR, Lsn::max())->empty());
}

TEST(Wal, GroupCommitSharesForces) {
  SimDisk disk;
  WalOptions opts;
  opts.group_commit_window = 2;
  Incarnation n(disk, opts);
  int durable = 0;
  for (const Lsn& l : range(1, 1, 8)) {
    ASSERT_TRUE(n.wal.append_forced(write_rec(kR, l), [&](Status s) { durable += s.is_ok(); }));
  }
  n.queue.run_all();
  EXPECT_EQ(durable, 8);
  EXPECT_EQ(n.wal.force_requests(), 8u);
  EXPECT_GE(n.wal.physical_forces(), 1u);
  EXPECT_LE(n.wal.physical_forces(), 8u);
}

TEST(Wal, RequestsDuringForceBatchIntoNext) {
  SimDisk disk;
  Incarnation n(disk);
  ASSERT_TRUE(n.wal.append_forced(write_rec(kR, {1, 1}), nullptr));
  n.queue.run_until(3);
  ASSERT_TRUE(n.wal.force_in_flight());
  for (const Lsn& l : range(1, 2, 6)) ASSERT_TRUE(n.wal.append_forced(write_rec(kR, l), nullptr));
  n.queue.run_all();
  EXPECT_EQ(n.wal.force_requests(), 6u);
  EXPECT_EQ(n.wal.physical_forces(), 2u);
}

TEST(Wal, ForceLatencyScalesWithBandwidth) {
  SimDisk disk;
  WalOptions opts;
  opts.group_commit_window = 0;
  opts.disk_bytes_per_tick = 16;
  Incarnation n(disk, opts);
  Tick durable_at = -1;
  std::vector<LogRecord> batch;
  for (const Lsn& l : range(1, 1, 4)) batch.push_back(write_rec(kR, l, std::string(100, 'x')));
  ASSERT_TRUE(n.wal.append_forced(batch, [&](Status) { durable_at = n.queue.now(); }));
  n.queue.run_all();
  size_t bytes = 0;
  for (const auto& [_, seg] : disk.segments()) bytes += seg.size();
  EXPECT_EQ(durable_at, opts.force_base_ticks + static_cast<Tick>((bytes + 15) / 16));
}

TEST(Wal, NonForcedMarkerLostOnCrash) {
  SimDisk disk;
  {
    Incarnation n(disk);
    ASSERT_TRUE(n.wal.append_forced(write_rec(kR, {1, 20}), nullptr));
    n.queue.run_all();
    ASSERT_TRUE(n.wal.append_non_forced(LogRecord::marker(kR, {1, 20})));
  }
  Incarnation n(disk);
  for (const auto& r : n.scan.records) EXPECT_TRUE(r.is_write());
}

TEST(Wal, NonForcedMarkerRidesNextForce) {
  SimDisk disk;
  {
    Incarnation n(disk);
    ASSERT_TRUE(n.wal.append_forced(write_rec(kR, {1, 20}), nullptr));
    n.queue.run_all();
    ASSERT_TRUE(n.wal.append_non_forced(LogRecord::marker(kR, {1, 20})));
    ASSERT_TRUE(n.wal.append_forced(write_rec(kR, {1, 21}), nullptr));
    n.queue.run_all();
  }
  Incarnation n(disk);
  ASSERT_EQ(n.scan.records.size(), 3u);
  EXPECT_EQ(n.scan.records[1], LogRecord::marker(kR, {1, 20}));
}

TEST(Wal, ZeroMarkerOnEmptyStream) {
  SimDisk disk;
  Incarnation n(disk);
  EXPECT_TRUE(n.wal.append_non_forced(LogRecord::marker(kR, Lsn())));
  EXPECT_EQ(n.wal.append_non_forced(LogRecord::marker(kR, {1, 1})).code(), Code::kStreamViolation);
}

TEST(Wal, StreamViolation) {
  SimDisk disk;
  Incarnation n(disk);
  ASSERT_TRUE(n.wal.append_forced(write_rec(kR, {1, 5}), nullptr));
  EXPECT_EQ(n.wal.append_forced(write_rec(kR, {1, 5}), nullptr).code(), Code::kStreamViolation);
  EXPECT_EQ(n.wal.append_forced(write_rec(kR, {1, 4}), nullptr).code(), Code::kStreamViolation);
  // Other cohorts have their own streams.
  EXPECT_TRUE(n.wal.append_forced(write_rec(kR + 1, {1, 1}), nullptr));
  EXPECT_EQ(n.wal.append_forced(LogRecord::marker(kR, {1, 5}), nullptr).code(), Code::kStreamViolation);
}

TEST(Wal, DiskFailed) {
  SimDisk disk;
  Incarnation n(disk);
  disk.set_failed(true);
  EXPECT_EQ(n.wal.append_forced(write_rec(kR, {1, 1}), nullptr).code(), Code::kDiskFailed);
  EXPECT_EQ(n.wal.append_non_forced(LogRecord::marker(kR, Lsn())).code(), Code::kDiskFailed);
}

TEST(Wal, LogicalTruncateOmitsAndPersists) {
  SimDisk disk;
  {
    Incarnation n(disk);
    for (const Lsn& l : range(1, 11, 22)) ASSERT_TRUE(n.wal.append_forced(write_rec(kR, l), nullptr));
    n.queue.run_all();
    ASSERT_TRUE(n.wal.logical_truncate(kR, {Lsn(1, 22)}));
    EXPECT_TRUE(n.wal.read_from(kR, Lsn(1, 21))->empty());
    EXPECT_EQ(n.wal.last_lsn(kR), Lsn(1, 21));
    EXPECT_EQ(n.wal.stream_tail(kR), Lsn(1, 22));
  }
  Incarnation n(disk);
  EXPECT_TRUE(n.wal.read_from(kR, Lsn(1, 21))->empty());
  EXPECT_EQ(n.wal.skipped(kR), (std::set<Lsn>{{1, 22}}));
  // The physical record is still there for the shared scan.
  EXPECT_TRUE(n.wal.contains(kR, {1, 22}));
}

TEST(Wal, LogicalTruncateEmptyAndTwice) {
  SimDisk disk;
  Incarnation n(disk);
  ASSERT_TRUE(n.wal.append_forced(write_rec(kR, {1, 1}), nullptr));
  n.queue.run_all();
  ASSERT_TRUE(n.wal.logical_truncate(kR, {}));
  EXPECT_TRUE(n.wal.skipped(kR).empty());
  EXPECT_FALSE(disk.get_blob("wal/skipped/" + std::to_string(kR)).has_value());
  ASSERT_TRUE(n.wal.logical_truncate(kR, {Lsn(1, 1)}));
  ASSERT_TRUE(n.wal.logical_truncate(kR, {Lsn(1, 1)}));
  EXPECT_EQ(n.wal.skipped(kR).size(), 1u);
  EXPECT_EQ(n.wal.logical_truncate(kR, {Lsn(1, 9)}).code(), Code::kPrecondition);
}

TEST(Wal, RollOverReportsFirstAvailable) {
  SimDisk disk;
  WalOptions opts;
  opts.segment_bytes = 1;  // one record per segment
  Incarnation n(disk, opts);
  for (const Lsn& l : range(1, 1, 60)) {
    ASSERT_TRUE(n.wal.append_forced(write_rec(kR, l), nullptr));
    n.queue.run_all();
  }
  ASSERT_TRUE(n.wal.roll_over(kR, Lsn(1, 50)));
  auto r = n.wal.read_from(kR, Lsn(1, 0));
  ASSERT_FALSE(r);
  EXPECT_EQ(r.code(), Code::kSegmentRolledOver);
  EXPECT_EQ(r.status().message(), "1.51");
  EXPECT_EQ(n.wal.reclaimed_through(kR), Lsn(1, 50));
  EXPECT_EQ(lsns_of(*n.wal.read_from(kR, Lsn(1, 50))), range(1, 51, 60));
  EXPECT_EQ(disk.segments().size(), 10u);
}

TEST(Wal, RollOverSurvivesRestart) {
  SimDisk disk;
  WalOptions opts;
  opts.segment_bytes = 1;
  {
    Incarnation n(disk, opts);
    for (const Lsn& l : range(1, 1, 10)) {
      ASSERT_TRUE(n.wal.append_forced(write_rec(kR, l), nullptr));
      n.queue.run_all();
    }
    ASSERT_TRUE(n.wal.logical_truncate(kR, {Lsn(1, 3), Lsn(1, 8)}));
    ASSERT_TRUE(n.wal.roll_over(kR, Lsn(1, 5)));
    // Skipped entries go with their segments.
    EXPECT_EQ(n.wal.skipped(kR), (std::set<Lsn>{{1, 8}}));
  }
  Incarnation n(disk, opts);
  EXPECT_EQ(n.wal.reclaimed_through(kR), Lsn(1, 5));
  EXPECT_EQ(n.wal.read_from(kR, Lsn(1, 4)).code(), Code::kSegmentRolledOver);
  EXPECT_EQ(lsns_of(*n.wal.read_from(kR, Lsn(1, 5))), (std::vector<Lsn>{{1, 6}, {1, 7}, {1, 9}, {1, 10}}));
  EXPECT_EQ(n.wal.skipped(kR), (std::set<Lsn>{{1, 8}}));
}

TEST(Wal, RollOverZeroIsNoOp) {
  SimDisk disk;
  Incarnation n(disk);
  ASSERT_TRUE(n.wal.append_forced(write_rec(kR, {1, 1}), nullptr));
  n.queue.run_all();
  EXPECT_TRUE(n.wal.roll_over(kR, Lsn()));
  EXPECT_EQ(n.wal.read_from(kR, Lsn())->size(), 1u);
}

TEST(Wal, RollOverSharedSegmentRetentionViolation) {
  SimDisk disk;
  WalOptions opts;
  opts.segment_bytes = 512;
  Incarnation n(disk, opts);
  // Interleave two cohorts until a few segments have been sealed.
  for (uint64_t s = 1; s <= 20; ++s) {
    ASSERT_TRUE(n.wal.append_forced(write_rec(kR, {1, s}), nullptr));
    ASSERT_TRUE(n.wal.append_forced(write_rec(kR + 1, {1, s}), nullptr));
    n.queue.run_all();
  }
  ASSERT_GT(n.wal.segment_count(), 2u);
  const size_t before = n.wal.segment_count();
  EXPECT_EQ(n.wal.roll_over(kR, Lsn(1, 20)).code(), Code::kRetentionViolation);
  EXPECT_EQ(n.wal.segment_count(), before);
  EXPECT_EQ(n.wal.read_from(kR, Lsn())->size(), 20u);
  // Once the other cohort catches up the segments go.
  EXPECT_TRUE(n.wal.roll_over(kR + 1, Lsn(1, 20)));
  EXPECT_LT(n.wal.segment_count(), before);
}

TEST(Wal, CorruptTailEndsScan) {
  SimDisk disk;
  {
    Incarnation n(disk);
    for (const Lsn& l : range(1, 1, 5)) {
      ASSERT_TRUE(n.wal.append_forced(write_rec(kR, l), nullptr));
      n.queue.run_all();
    }
  }
  Bytes seg = disk.segments().begin()->second;
  seg.back() ^= 0xFF;
  const uint64_t id = disk.segments().begin()->first;
  disk.drop_segment(id);
  disk.append_segment(id, seg);
  Incarnation n(disk);
  EXPECT_TRUE(n.scan.corrupt);
  EXPECT_EQ(lsns_of(*n.wal.read_from(kR, Lsn())), range(1, 1, 4));
  // The stream continues past the torn record.
  EXPECT_TRUE(n.wal.append_forced(write_rec(kR, {1, 5}), nullptr));
}

TEST(Wal, RecordCodecRoundTrip) {
  LogRecord rec = LogRecord::write(3, {2, 99}, WriteOp::conditional_put("key", "col", "val", 4));
  rec.op.columns[0].version = 5;
  ByteWriter w;
  encode_record(w, rec);
  EXPECT_GT(w.size(), kRecordHeaderBytes);
  ByteReader r(w.buf());
  auto back = decode_record(r);
  ASSERT_TRUE(back);
  EXPECT_EQ(*back, rec);
  Bytes torn = w.take();
  torn.pop_back();
  ByteReader tr(torn);
  EXPECT_FALSE(decode_record(tr));
}

// Randomized crash points: every acknowledged record survives, and each
// cohort stream stays strictly increasing.
TEST(WalProperty, AcknowledgedRecordsSurviveCrashes) {
  for (uint32_t seed = 1; seed <= 40; ++seed) {
    std::mt19937 rng(seed);
    SimDisk disk;
    WalOptions opts;
    opts.segment_bytes = 256;
    opts.group_commit_window = static_cast<Tick>(rng() % 3);
    std::map<CohortId, uint64_t> next_seq;
    std::set<std::pair<CohortId, Lsn>> acked;
    for (int round = 0; round < 4; ++round) {
      auto n = std::make_unique<Incarnation>(disk, opts);
      const int ops = 10 + static_cast<int>(rng() % 20);
      for (int i = 0; i < ops; ++i) {
        const CohortId c = rng() % 3;
        const Lsn l(1, ++next_seq[c]);
        ASSERT_TRUE(n->wal.append_forced(write_rec(c, l), [&acked, c, l](Status s) {
          if (s) acked.insert({c, l});
        }));
        n->queue.run_until(n->queue.now() + static_cast<Tick>(rng() % 8));
      }
      // Crash at an arbitrary point; whatever was not acknowledged may vanish.
      n->queue.run_until(n->queue.now() + static_cast<Tick>(rng() % 15));
      n.reset();
      Incarnation check(disk, opts);
      for (const auto& [c, l] : acked) ASSERT_TRUE(check.wal.contains(c, l)) << seed << " " << l.to_string();
      for (CohortId c = 0; c < 3; ++c) {
        auto recs = check.wal.read_from(c, Lsn());
        ASSERT_TRUE(recs);
        for (size_t i = 1; i < recs->size(); ++i) ASSERT_LT((*recs)[i - 1].lsn, (*recs)[i].lsn);
        next_seq[c] = std::max(next_seq[c], check.wal.stream_tail(c).seq);
      }
    }
  }
}

}  // namespace
}  // namespace spinnaker
