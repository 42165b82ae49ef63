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

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spinnaker/common/status.h"
#include "spinnaker/common/trace_sink.h"
#include "spinnaker/common/write_op.h"
#include "spinnaker/wal/sim_disk.h"

namespace spinnaker {

class Wal;

struct CellKey {
  std::string key;
  std::string column;
  auto operator<=>(const CellKey&) const = default;
};

// Latest state of one (key, column). A tombstone has no value but keeps its
// version so the counter never restarts after a delete.
struct Cell {
  std::optional<std::string> value;
  uint64_t version = 0;
  Lsn lsn;

  bool tombstone() const { return !value.has_value(); }
  bool operator==(const Cell&) const = default;
};

using CellMap = std::map<CellKey, Cell>;

struct SSTableMeta {
  uint64_t id = 0;
  std::string min_key;
  std::string max_key;
  Lsn min_lsn;
  Lsn max_lsn;
  uint64_t entries = 0;
};

// Immutable sorted table. Besides the cells it keeps the LSN of every
// committed write it captured, including writes whose cells were later
// shadowed, so catch-up can report the exact committed LSN set.
struct SSTable {
  SSTableMeta meta;
  CellMap cells;
  std::vector<Lsn> lsns;

  Bytes encode() const;
  static std::optional<SSTable> decode(std::span<const uint8_t> bytes);
};

struct CommittedWrites {
  std::vector<LoggedWrite> writes;  // LSN order, no duplicates
  std::vector<Lsn> lsns;            // every committed LSN in range
};

// Memtable plus SSTables of one cohort replica.
class CohortStore {
 public:
  // `disk` may be null for a purely in-memory store.
  CohortStore(CohortId cohort, SimDisk* disk, TraceSink* trace = nullptr, std::string owner = "store");

  // Loads the table set from disk. The memtable starts empty.
  Status load();

  // Applies a committed write. Re-applying a write whose LSN a cell already
  // reflects leaves that cell untouched.
  void apply_write(const WriteOp& op, Lsn lsn);

  // Newest cell across memtable and tables; deleted cells come back as
  // tombstones. kNotFound only when the cell was never written.
  Result<Cell> get(const std::string& key, const std::string& column) const;
  // 0 when the cell was never written.
  uint64_t current_version(const std::string& key, const std::string& column) const;

  Result<SSTableMeta> flush_memtable();
  Result<SSTableMeta> compact(const std::vector<uint64_t>& table_ids);

  // Greatest LSN captured in flushed tables.
  Lsn checkpoint_lsn() const { return checkpoint_; }
  Lsn applied_lsn() const { return applied_; }
  size_t memtable_entries() const { return memtable_.size(); }
  std::vector<SSTableMeta> tables() const;
  const SSTable* table(uint64_t id) const;

  // Table-resident committed writes with after < lsn <= through.
  CommittedWrites table_writes(Lsn after, Lsn through) const;

  // Merged view (memtable over tables).
  CellMap snapshot() const;
  // Canonical byte encoding of snapshot(); equal bytes mean equal state.
  Bytes snapshot_bytes() const;

  CohortId cohort() const { return cohort_; }

 private:
  const Cell* lookup(const CellKey& k) const;
  void persist_manifest();
  std::string table_blob(uint64_t id) const;
  std::string manifest_blob() const;

  CohortId cohort_;
  SimDisk* disk_;
  TraceSink* trace_;
  std::string owner_;
  CellMap memtable_;
  std::set<Lsn> memtable_lsns_;
  std::map<uint64_t, SSTable> tables_;
  uint64_t next_table_id_ = 1;
  Lsn checkpoint_;
  Lsn applied_;
};

// Every committed write of the cohort after `after` up to `through`, taken
// from the log where it is still retained and from SSTables where it has
// been rolled over.
CommittedWrites committed_writes_since(const Wal& wal, const CohortStore& store, CohortId cohort,
                                       Lsn after, Lsn through);

}  // namespace spinnaker
