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

#include "spinnaker/storage/store.h"

#include <algorithm>

#include "spinnaker/wal/wal.h"

namespace spinnaker {

namespace {

constexpr uint32_t kTableMagic = 0x53535431;  // "SST1"
constexpr size_t kIndexInterval = 16;

void put_cell(ByteWriter& w, const CellKey& k, const Cell& c) {
  w.put_string(k.key);
  w.put_string(k.column);
  w.put_u8(c.value ? 1 : 0);
  if (c.value) w.put_string(*c.value);
  w.put_u64(c.version);
  w.put_u64(c.lsn.encode());
}

bool get_cell(ByteReader& r, CellKey& k, Cell& c) {
  k.key = r.get_string();
  k.column = r.get_string();
  const uint8_t has_value = r.get_u8();
  c.value.reset();
  if (has_value) c.value = r.get_string();
  c.version = r.get_u64();
  c.lsn = Lsn::decode(r.get_u64());
  return r.ok();
}

}  // namespace

Bytes SSTable::encode() const {
  // Layout: magic, id, entry block, sparse index block (every 16th entry's
  // key and offset), captured LSN list, footer with block offsets and crc.
  ByteWriter w;
  w.put_u32(kTableMagic);
  w.put_u64(meta.id);
  std::vector<std::pair<const CellKey*, uint32_t>> index;
  w.put_u32(static_cast<uint32_t>(cells.size()));
  size_t i = 0;
  for (const auto& [k, c] : cells) {
    if (i++ % kIndexInterval == 0) index.emplace_back(&k, static_cast<uint32_t>(w.size()));
    put_cell(w, k, c);
  }
  const auto index_offset = static_cast<uint32_t>(w.size());
  w.put_u32(static_cast<uint32_t>(index.size()));
  for (const auto& [k, off] : index) {
    w.put_string(k->key);
    w.put_string(k->column);
    w.put_u32(off);
  }
  const auto lsn_offset = static_cast<uint32_t>(w.size());
  w.put_u32(static_cast<uint32_t>(lsns.size()));
  for (const auto& l : lsns) w.put_u64(l.encode());
  w.put_u32(index_offset);
  w.put_u32(lsn_offset);
  w.put_u32(crc32_of(w.buf()));
  return w.take();
}

std::optional<SSTable> SSTable::decode(std::span<const uint8_t> bytes) {
  if (bytes.size() < 16) return std::nullopt;
  const size_t body = bytes.size() - 4;
  ByteReader tail(bytes.subspan(body));
  if (tail.get_u32() != crc32_of(bytes.first(body))) return std::nullopt;

  ByteReader r(bytes.first(body));
  if (r.get_u32() != kTableMagic) return std::nullopt;
  SSTable t;
  t.meta.id = r.get_u64();
  const uint32_t n = r.get_u32();
  for (uint32_t i = 0; i < n && r.ok(); ++i) {
    CellKey k;
    Cell c;
    if (!get_cell(r, k, c)) return std::nullopt;
    t.cells.emplace(std::move(k), std::move(c));
  }
  const uint32_t index_entries = r.get_u32();
  for (uint32_t i = 0; i < index_entries && r.ok(); ++i) {
    r.get_string();
    r.get_string();
    r.get_u32();
  }
  const uint32_t lsn_count = r.get_u32();
  for (uint32_t i = 0; i < lsn_count && r.ok(); ++i) t.lsns.push_back(Lsn::decode(r.get_u64()));
  r.get_u32();
  r.get_u32();
  if (!r.done()) return std::nullopt;

  t.meta.entries = t.cells.size();
  if (!t.cells.empty()) {
    t.meta.min_key = t.cells.begin()->first.key;
    t.meta.max_key = t.cells.rbegin()->first.key;
  }
  if (!t.lsns.empty()) {
    t.meta.min_lsn = *std::min_element(t.lsns.begin(), t.lsns.end());
    t.meta.max_lsn = *std::max_element(t.lsns.begin(), t.lsns.end());
  }
  return t;
}

CohortStore::CohortStore(CohortId cohort, SimDisk* disk, TraceSink* trace, std::string owner)
    : cohort_(cohort), disk_(disk), trace_(trace ? trace : &NullTrace::instance()), owner_(std::move(owner)) {}

std::string CohortStore::table_blob(uint64_t id) const {
  return "sst/" + std::to_string(cohort_) + "/" + std::to_string(id);
}

std::string CohortStore::manifest_blob() const { return "sst/" + std::to_string(cohort_) + "/manifest"; }

Status CohortStore::load() {
  memtable_.clear();
  memtable_lsns_.clear();
  tables_.clear();
  checkpoint_ = Lsn();
  applied_ = Lsn();
  next_table_id_ = 1;
  if (!disk_) return Status::ok();
  auto manifest = disk_->get_blob(manifest_blob());
  if (!manifest) return Status::ok();
  ByteReader r(*manifest);
  next_table_id_ = r.get_u64();
  const uint32_t n = r.get_u32();
  std::vector<uint64_t> ids;
  for (uint32_t i = 0; i < n && r.ok(); ++i) ids.push_back(r.get_u64());
  if (!r.done()) return make_error(Code::kCorruptLog, owner_ + ": bad table manifest");
  for (uint64_t id : ids) {
    auto blob = disk_->get_blob(table_blob(id));
    if (!blob) return make_error(Code::kCorruptLog, owner_ + ": missing table " + std::to_string(id));
    auto table = SSTable::decode(*blob);
    if (!table) return make_error(Code::kCorruptLog, owner_ + ": corrupt table " + std::to_string(id));
    checkpoint_ = std::max(checkpoint_, table->meta.max_lsn);
    tables_.emplace(id, std::move(*table));
  }
  applied_ = checkpoint_;
  // Tables written by a flush that never reached the manifest are garbage.
  for (const auto& name : disk_->blob_names("sst/" + std::to_string(cohort_) + "/")) {
    if (name == manifest_blob()) continue;
    const uint64_t id = std::stoull(name.substr(name.rfind('/') + 1));
    if (!tables_.contains(id)) disk_->erase_blob(name);
  }
  return Status::ok();
}

void CohortStore::persist_manifest() {
  if (!disk_) return;
  ByteWriter w;
  w.put_u64(next_table_id_);
  w.put_u32(static_cast<uint32_t>(tables_.size()));
  for (const auto& [id, _] : tables_) w.put_u64(id);
  disk_->put_blob(manifest_blob(), w.take());
}

const Cell* CohortStore::lookup(const CellKey& k) const {
  if (auto it = memtable_.find(k); it != memtable_.end()) return &it->second;
  const Cell* best = nullptr;
  for (const auto& [_, t] : tables_) {
    auto it = t.cells.find(k);
    if (it != t.cells.end() && (!best || it->second.lsn > best->lsn)) best = &it->second;
  }
  return best;
}

void CohortStore::apply_write(const WriteOp& op, Lsn lsn) {
  bool touched = false;
  for (const auto& col : op.columns) {
    CellKey k{op.key, col.column};
    const Cell* cur = lookup(k);
    if (cur && cur->lsn >= lsn) continue;
    const uint64_t version = col.version ? col.version : (cur ? cur->version : 0) + 1;
    memtable_[k] = Cell{col.value, version, lsn};
    touched = true;
  }
  if (touched && lsn > checkpoint_) memtable_lsns_.insert(lsn);
  applied_ = std::max(applied_, lsn);
}

Result<Cell> CohortStore::get(const std::string& key, const std::string& column) const {
  const Cell* c = lookup(CellKey{key, column});
  if (!c) return make_error(Code::kNotFound, key + "/" + column);
  return *c;
}

uint64_t CohortStore::current_version(const std::string& key, const std::string& column) const {
  const Cell* c = lookup(CellKey{key, column});
  return c ? c->version : 0;
}

Result<SSTableMeta> CohortStore::flush_memtable() {
  if (memtable_.empty()) return make_error(Code::kPrecondition, owner_ + ": memtable is empty");
  SSTable t;
  t.meta.id = next_table_id_++;
  t.cells = std::move(memtable_);
  t.lsns.assign(memtable_lsns_.begin(), memtable_lsns_.end());
  t.meta.entries = t.cells.size();
  t.meta.min_key = t.cells.begin()->first.key;
  t.meta.max_key = t.cells.rbegin()->first.key;
  if (t.lsns.empty()) {
    for (const auto& [_, c] : t.cells) t.lsns.push_back(c.lsn);
    std::sort(t.lsns.begin(), t.lsns.end());
    t.lsns.erase(std::unique(t.lsns.begin(), t.lsns.end()), t.lsns.end());
  }
  t.meta.min_lsn = t.lsns.front();
  t.meta.max_lsn = t.lsns.back();
  memtable_.clear();
  memtable_lsns_.clear();
  if (disk_) disk_->put_blob(table_blob(t.meta.id), t.encode());
  checkpoint_ = std::max(checkpoint_, t.meta.max_lsn);
  SSTableMeta meta = t.meta;
  tables_.emplace(meta.id, std::move(t));
  persist_manifest();
  trace_->record(owner_, "flush", {{"cohort", cohort_}, {"table", meta.id}, {"entries", meta.entries},
                                   {"max_lsn", meta.max_lsn.to_string()}});
  return meta;
}

Result<SSTableMeta> CohortStore::compact(const std::vector<uint64_t>& table_ids) {
  if (table_ids.empty()) return make_error(Code::kPrecondition, owner_ + ": nothing to compact");
  for (uint64_t id : table_ids) {
    if (!tables_.contains(id)) {
      return make_error(Code::kPrecondition, owner_ + ": no table " + std::to_string(id));
    }
  }
  SSTable merged;
  merged.meta.id = next_table_id_++;
  std::set<Lsn> lsns;
  for (uint64_t id : table_ids) {
    const SSTable& t = tables_.at(id);
    for (const auto& [k, c] : t.cells) {
      auto [it, inserted] = merged.cells.try_emplace(k, c);
      if (!inserted && c.lsn > it->second.lsn) it->second = c;
    }
    lsns.insert(t.lsns.begin(), t.lsns.end());
  }
  merged.lsns.assign(lsns.begin(), lsns.end());
  merged.meta.entries = merged.cells.size();
  if (!merged.cells.empty()) {
    merged.meta.min_key = merged.cells.begin()->first.key;
    merged.meta.max_key = merged.cells.rbegin()->first.key;
  }
  if (!merged.lsns.empty()) {
    merged.meta.min_lsn = merged.lsns.front();
    merged.meta.max_lsn = merged.lsns.back();
  }
  if (disk_) disk_->put_blob(table_blob(merged.meta.id), merged.encode());
  for (uint64_t id : table_ids) tables_.erase(id);
  SSTableMeta meta = merged.meta;
  tables_.emplace(meta.id, std::move(merged));
  persist_manifest();
  if (disk_) {
    for (uint64_t id : table_ids) disk_->erase_blob(table_blob(id));
  }
  trace_->record(owner_, "compact", {{"cohort", cohort_}, {"table", meta.id}, {"inputs", table_ids.size()}});
  return meta;
}

std::vector<SSTableMeta> CohortStore::tables() const {
  std::vector<SSTableMeta> out;
  for (const auto& [_, t] : tables_) out.push_back(t.meta);
  return out;
}

const SSTable* CohortStore::table(uint64_t id) const {
  auto it = tables_.find(id);
  return it == tables_.end() ? nullptr : &it->second;
}

CommittedWrites CohortStore::table_writes(Lsn after, Lsn through) const {
  CommittedWrites out;
  std::set<Lsn> lsns;
  CellMap latest;
  for (const auto& [_, t] : tables_) {
    for (const auto& l : t.lsns) {
      if (l > after && l <= through) lsns.insert(l);
    }
    for (const auto& [k, c] : t.cells) {
      if (c.lsn <= after || c.lsn > through) continue;
      auto [it, inserted] = latest.try_emplace(k, c);
      if (!inserted && c.lsn > it->second.lsn) it->second = c;
    }
  }
  // Regroup surviving cells into one write per LSN; a write touches a single
  // key and is either all puts or all deletes.
  std::map<Lsn, WriteOp> by_lsn;
  for (const auto& [k, c] : latest) {
    WriteOp& op = by_lsn[c.lsn];
    op.key = k.key;
    op.kind = c.value ? OpKind::kPut : OpKind::kDelete;
    op.columns.push_back(ColumnWrite{k.column, c.value, 0, c.version});
  }
  for (auto& [l, op] : by_lsn) out.writes.push_back(LoggedWrite{std::move(op), l});
  out.lsns.assign(lsns.begin(), lsns.end());
  return out;
}

CellMap CohortStore::snapshot() const {
  CellMap out;
  for (const auto& [_, t] : tables_) {
    for (const auto& [k, c] : t.cells) {
      auto [it, inserted] = out.try_emplace(k, c);
      if (!inserted && c.lsn > it->second.lsn) it->second = c;
    }
  }
  for (const auto& [k, c] : memtable_) out[k] = c;
  return out;
}

Bytes CohortStore::snapshot_bytes() const {
  ByteWriter w;
  for (const auto& [k, c] : snapshot()) put_cell(w, k, c);
  return w.take();
}

CommittedWrites committed_writes_since(const Wal& wal, const CohortStore& store, CohortId cohort, Lsn after,
                                       Lsn through) {
  CommittedWrites out;
  Lsn from = after;
  const Lsn reclaimed = wal.reclaimed_through(cohort);
  if (after < reclaimed) {
    out = store.table_writes(after, std::min(reclaimed, through));
    from = reclaimed;
  }
  if (from >= through) return out;
  auto records = wal.read_from(cohort, from);
  if (!records) return out;
  for (auto& rec : *records) {
    if (rec.lsn > through) break;
    out.lsns.push_back(rec.lsn);
    out.writes.push_back(LoggedWrite{std::move(rec.op), rec.lsn});
  }
  return out;
}

}  // namespace spinnaker
