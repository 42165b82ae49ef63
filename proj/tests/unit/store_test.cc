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

#include <random>

#include "spinnaker/storage/store.h"
#include "spinnaker/wal/wal.h"

namespace spinnaker {
namespace {

constexpr CohortId kR = 3;

TEST(Store, FirstPutIsVersionOne) {
  CohortStore s(kR, nullptr);
  s.apply_write(WriteOp::put("k", "c", "v"), {1, 1});
  auto c = s.get("k", "c");
  ASSERT_TRUE(c);
  EXPECT_EQ(c->value, "v");
  EXPECT_EQ(c->version, 1u);
}

TEST(Store, ReapplyIsNoOp) {
  CohortStore a(kR, nullptr), b(kR, nullptr);
  a.apply_write(WriteOp::put("k", "c", "v"), {1, 1});
  b.apply_write(WriteOp::put("k", "c", "v"), {1, 1});
  b.apply_write(WriteOp::put("k", "c", "v"), {1, 1});
  EXPECT_EQ(a.snapshot_bytes(), b.snapshot_bytes());
  EXPECT_EQ(b.get("k", "c")->version, 1u);
}

TEST(Store, DeleteBumpsVersion) {
  CohortStore s(kR, nullptr);
  s.apply_write(WriteOp::put("k", "c", "v"), {1, 1});
  s.apply_write(WriteOp::del("k", "c"), {1, 2});
  auto c = s.get("k", "c");
  ASSERT_TRUE(c);
  EXPECT_TRUE(c->tombstone());
  EXPECT_EQ(c->version, 2u);
  // Reinsertion continues the counter.
  s.apply_write(WriteOp::put("k", "c", "w"), {1, 3});
  EXPECT_EQ(s.get("k", "c")->version, 3u);
}

TEST(Store, NeverWrittenIsNotFound) {
  CohortStore s(kR, nullptr);
  EXPECT_EQ(s.get("nope", "c").code(), Code::kNotFound);
  EXPECT_EQ(s.current_version("nope", "c"), 0u);
}

TEST(Store, NewestWinsAcrossFlush) {
  SimDisk disk;
  CohortStore s(kR, &disk);
  s.apply_write(WriteOp::put("k", "c", "old"), {1, 1});
  ASSERT_TRUE(s.flush_memtable());
  s.apply_write(WriteOp::put("k", "c", "new"), {1, 2});
  EXPECT_EQ(s.get("k", "c")->value, "new");
  EXPECT_EQ(s.get("k", "c")->version, 2u);
}

TEST(Store, CounterSequence) {
  CohortStore s(kR, nullptr);
  s.apply_write(WriteOp::put("key", "c", "0"), {1, 1});
  auto c = s.get("key", "c");
  auto op = WriteOp::conditional_put("key", "c", std::to_string(std::stoi(*c->value) + 1), c->version);
  s.apply_write(op, {1, 2});
  EXPECT_EQ(s.get("key", "c")->value, "1");
  EXPECT_EQ(s.get("key", "c")->version, 2u);
}

TEST(Store, CarriedVersionWins) {
  CohortStore s(kR, nullptr);
  auto op = WriteOp::put("k", "c", "v");
  op.columns[0].version = 7;
  s.apply_write(op, {1, 1});
  EXPECT_EQ(s.get("k", "c")->version, 7u);
}

TEST(Store, FlushTagsLsnRange) {
  SimDisk disk;
  CohortStore s(kR, &disk);
  for (uint64_t i = 5; i <= 9; ++i) s.apply_write(WriteOp::put("k" + std::to_string(i), "c", "v"), {1, i});
  auto meta = s.flush_memtable();
  ASSERT_TRUE(meta);
  EXPECT_EQ(meta->min_lsn, Lsn(1, 5));
  EXPECT_EQ(meta->max_lsn, Lsn(1, 9));
  EXPECT_EQ(meta->entries, 5u);
  EXPECT_EQ(meta->min_key, "k5");
  EXPECT_EQ(meta->max_key, "k9");
  EXPECT_EQ(s.checkpoint_lsn(), Lsn(1, 9));
  EXPECT_EQ(s.memtable_entries(), 0u);
  for (const auto& [_, c] : s.table(meta->id)->cells) {
    EXPECT_LE(meta->min_lsn, c.lsn);
    EXPECT_LE(c.lsn, meta->max_lsn);
  }
}

TEST(Store, FlushEmptyIsPrecondition) {
  CohortStore s(kR, nullptr);
  EXPECT_EQ(s.flush_memtable().code(), Code::kPrecondition);
}

TEST(Store, TablesSurviveReload) {
  SimDisk disk;
  Bytes before;
  {
    CohortStore s(kR, &disk);
    s.apply_write(WriteOp::put("a", "c", "1"), {1, 1});
    s.apply_write(WriteOp::put("b", "c", "2"), {1, 2});
    ASSERT_TRUE(s.flush_memtable());
    s.apply_write(WriteOp::del("a", "c"), {1, 3});
    ASSERT_TRUE(s.flush_memtable());
    before = s.snapshot_bytes();
  }
  CohortStore s(kR, &disk);
  ASSERT_TRUE(s.load());
  EXPECT_EQ(s.snapshot_bytes(), before);
  EXPECT_EQ(s.checkpoint_lsn(), Lsn(1, 3));
  EXPECT_EQ(s.tables().size(), 2u);
}

TEST(Store, CompactDisjointIsUnion) {
  SimDisk disk;
  CohortStore s(kR, &disk);
  s.apply_write(WriteOp::put("a", "c", "1"), {1, 1});
  auto t1 = s.flush_memtable();
  s.apply_write(WriteOp::put("b", "c", "2"), {1, 2});
  auto t2 = s.flush_memtable();
  const Bytes before = s.snapshot_bytes();
  auto m = s.compact({t1->id, t2->id});
  ASSERT_TRUE(m);
  EXPECT_EQ(m->entries, 2u);
  EXPECT_EQ(m->min_lsn, Lsn(1, 1));
  EXPECT_EQ(m->max_lsn, Lsn(1, 2));
  EXPECT_EQ(s.tables().size(), 1u);
  EXPECT_EQ(s.snapshot_bytes(), before);
}

TEST(Store, CompactDeleteShadowsOlderWrite) {
  SimDisk disk;
  CohortStore s(kR, &disk);
  s.apply_write(WriteOp::put("a", "c", "1"), {1, 1});
  auto t1 = s.flush_memtable();
  s.apply_write(WriteOp::del("a", "c"), {1, 2});
  auto t2 = s.flush_memtable();
  auto m = s.compact({t1->id, t2->id});
  ASSERT_TRUE(m);
  const SSTable* out = s.table(m->id);
  ASSERT_EQ(out->cells.size(), 1u);
  // Only the tombstone is left; it keeps the version counter alive.
  EXPECT_TRUE(out->cells.begin()->second.tombstone());
  EXPECT_TRUE(s.get("a", "c")->tombstone());
  EXPECT_EQ(s.get("a", "c")->version, 2u);
}

TEST(Store, CompactSingleTableIsIdentity) {
  SimDisk disk;
  CohortStore s(kR, &disk);
  s.apply_write(WriteOp::put("a", "c", "1"), {1, 1});
  s.apply_write(WriteOp::put("a", "d", "2"), {1, 2});
  auto t1 = s.flush_memtable();
  const CellMap cells = s.table(t1->id)->cells;
  auto m = s.compact({t1->id});
  ASSERT_TRUE(m);
  EXPECT_EQ(s.table(m->id)->cells, cells);
  EXPECT_EQ(s.compact({99}).code(), Code::kPrecondition);
}

TEST(Store, SstableCodecRejectsCorruption) {
  SSTable t;
  t.meta.id = 4;
  for (int i = 0; i < 40; ++i) {
    t.cells[CellKey{"k" + std::to_string(i), "c"}] = Cell{std::to_string(i), 1, Lsn(1, i + 1)};
    t.lsns.emplace_back(1, i + 1);
  }
  Bytes b = t.encode();
  auto back = SSTable::decode(b);
  ASSERT_TRUE(back);
  EXPECT_EQ(back->cells, t.cells);
  EXPECT_EQ(back->lsns, t.lsns);
  b[b.size() / 2] ^= 1;
  EXPECT_FALSE(SSTable::decode(b));
}

struct LoggedCohort {
  explicit LoggedCohort(WalOptions opts) : wal(disk, queue, opts), store(kR, &disk) { wal.open(); }
  void commit(const WriteOp& op, Lsn l) {
    EXPECT_TRUE(wal.append_forced(LogRecord::write(kR, l, op), nullptr));
    queue.run_all();
    store.apply_write(op, l);
  }
  SimDisk disk;
  EventQueue queue;
  Wal wal;
  CohortStore store;
};

WalOptions tiny_segments() {
  WalOptions o;
  o.segment_bytes = 1;
  return o;
}

TEST(CommittedWritesSince, AtCommitPointIsEmpty) {
  LoggedCohort n(tiny_segments());
  for (uint64_t i = 1; i <= 5; ++i) n.commit(WriteOp::put("k", "c", std::to_string(i)), {1, i});
  auto got = committed_writes_since(n.wal, n.store, kR, {1, 5}, {1, 5});
  EXPECT_TRUE(got.writes.empty());
  EXPECT_TRUE(got.lsns.empty());
}

TEST(CommittedWritesSince, ServedFromTablesAfterRollOver) {
  LoggedCohort n(tiny_segments());
  for (uint64_t i = 1; i <= 9; ++i) n.commit(WriteOp::put("k" + std::to_string(i), "c", "v"), {1, i});
  ASSERT_TRUE(n.store.flush_memtable());
  ASSERT_TRUE(n.wal.roll_over(kR, n.store.checkpoint_lsn()));
  ASSERT_EQ(n.wal.read_from(kR, {1, 4}).code(), Code::kSegmentRolledOver);
  for (uint64_t i = 10; i <= 12; ++i) n.commit(WriteOp::put("k" + std::to_string(i), "c", "v"), {1, i});

  auto got = committed_writes_since(n.wal, n.store, kR, {1, 4}, {1, 12});
  std::vector<Lsn> lsns;
  for (const auto& w : got.writes) lsns.push_back(w.lsn);
  std::vector<Lsn> want;
  for (uint64_t i = 5; i <= 12; ++i) want.emplace_back(1, i);
  EXPECT_EQ(lsns, want);
  EXPECT_EQ(got.lsns, want);

  // A follower at 1.4 that applies the shipment converges.
  CohortStore follower(kR, nullptr);
  for (uint64_t i = 1; i <= 4; ++i) follower.apply_write(WriteOp::put("k" + std::to_string(i), "c", "v"), {1, i});
  for (const auto& w : got.writes) follower.apply_write(w.op, w.lsn);
  EXPECT_EQ(follower.snapshot_bytes(), n.store.snapshot_bytes());
}

TEST(CommittedWritesSince, ExcludesSkippedAndUncommitted) {
  LoggedCohort n(WalOptions{});
  for (uint64_t i = 11; i <= 22; ++i) {
    ASSERT_TRUE(n.wal.append_forced(LogRecord::write(kR, {1, i}, WriteOp::put("k", "c", "v")), nullptr));
  }
  n.queue.run_all();
  ASSERT_TRUE(n.wal.logical_truncate(kR, {Lsn(1, 22)}));
  auto got = committed_writes_since(n.wal, n.store, kR, {1, 10}, {1, 21});
  ASSERT_EQ(got.lsns.size(), 11u);
  EXPECT_EQ(got.lsns.back(), Lsn(1, 21));
  got = committed_writes_since(n.wal, n.store, kR, {1, 10}, {1, 20});
  EXPECT_EQ(got.lsns.back(), Lsn(1, 20));
}

// Reads from memtable plus tables must equal a fresh replay of the committed
// log, and catch-up across a rolled-over prefix must match one without it,
// whatever the interleaving of flushes, compactions and rollovers.
TEST(StoreProperty, ReadEquivalenceUnderFlushCompactRollOver) {
  for (uint32_t seed = 1; seed <= 60; ++seed) {
    std::mt19937 rng(seed);
    LoggedCohort n(tiny_segments());
    CohortStore plain(kR, nullptr);
    std::vector<LoggedWrite> history;
    const int ops = 40 + static_cast<int>(rng() % 60);
    for (int i = 1; i <= ops; ++i) {
      const std::string key = "k" + std::to_string(rng() % 6);
      const std::string col = (rng() % 2) ? "a" : "b";
      WriteOp op = (rng() % 4 == 0) ? WriteOp::del(key, col) : WriteOp::put(key, col, std::to_string(i));
      op.columns[0].version = n.store.current_version(key, col) + 1;
      const Lsn l(1, static_cast<uint64_t>(i));
      n.commit(op, l);
      plain.apply_write(op, l);
      history.push_back({op, l});
      switch (rng() % 10) {
        case 0:
        case 1:
          if (n.store.memtable_entries() > 0) ASSERT_TRUE(n.store.flush_memtable());
          break;
        case 2: {
          auto tables = n.store.tables();
          if (tables.size() >= 2) {
            std::vector<uint64_t> ids;
            for (const auto& t : tables) {
              if (rng() % 2 || ids.empty()) ids.push_back(t.id);
            }
            ASSERT_TRUE(n.store.compact(ids));
          }
          break;
        }
        case 3:
          ASSERT_TRUE(n.wal.roll_over(kR, n.store.checkpoint_lsn()));
          break;
        default:
          break;
      }
    }
    ASSERT_EQ(n.store.snapshot_bytes(), plain.snapshot_bytes()) << "seed " << seed;

    const uint64_t after_seq = rng() % static_cast<uint64_t>(ops);
    const Lsn after(after_seq == 0 ? 0 : 1, after_seq);
    auto got = committed_writes_since(n.wal, n.store, kR, after, {1, static_cast<uint64_t>(ops)});
    std::vector<Lsn> want;
    for (const auto& w : history) {
      if (w.lsn > after) want.push_back(w.lsn);
    }
    ASSERT_EQ(got.lsns, want) << "seed " << seed;
    for (size_t i = 1; i < got.writes.size(); ++i) ASSERT_LT(got.writes[i - 1].lsn, got.writes[i].lsn);

    CohortStore follower(kR, nullptr);
    for (const auto& w : history) {
      if (w.lsn <= after) follower.apply_write(w.op, w.lsn);
    }
    for (const auto& w : got.writes) follower.apply_write(w.op, w.lsn);
    ASSERT_EQ(follower.snapshot_bytes(), plain.snapshot_bytes()) << "seed " << seed;
  }
}

}  // namespace
}  // namespace spinnaker
