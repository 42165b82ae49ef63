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

#include "spinnaker/wal/wal.h"

#include <algorithm>

namespace spinnaker {

namespace {

constexpr const char* kWatermarkBlob = "wal/watermarks";

uint32_t record_checksum(CohortId cohort, uint64_t lsn, uint32_t len, std::span<const uint8_t> body) {
  ByteWriter h;
  h.put_u32(cohort);
  h.put_u64(lsn);
  h.put_u32(len);
  uint32_t crc = crc32_of(h.buf());
  return crc32_of(body, crc);
}

}  // namespace

void encode_record(ByteWriter& w, const LogRecord& rec) {
  ByteWriter body;
  body.put_u8(static_cast<uint8_t>(rec.type));
  if (rec.is_write()) encode_write_op(body, rec.op);
  const auto len = static_cast<uint32_t>(body.size());
  w.put_u32(rec.cohort);
  w.put_u64(rec.lsn.encode());
  w.put_u32(len);
  w.put_u32(record_checksum(rec.cohort, rec.lsn.encode(), len, body.buf()));
  w.put_bytes(body.buf());
}

std::optional<LogRecord> decode_record(ByteReader& r) {
  if (r.remaining() < kRecordHeaderBytes) return std::nullopt;
  LogRecord rec;
  rec.cohort = r.get_u32();
  const uint64_t packed = r.get_u64();
  const uint32_t len = r.get_u32();
  const uint32_t crc = r.get_u32();
  auto body = r.get_span(len);
  if (!r.ok()) return std::nullopt;
  if (record_checksum(rec.cohort, packed, len, body) != crc) return std::nullopt;
  rec.lsn = Lsn::decode(packed);
  ByteReader br(body);
  const uint8_t type = br.get_u8();
  if (type == static_cast<uint8_t>(RecordType::kWrite)) {
    auto op = decode_write_op(br);
    if (!op) return std::nullopt;
    rec.op = std::move(*op);
  } else if (type != static_cast<uint8_t>(RecordType::kLastCommitted)) {
    return std::nullopt;
  }
  rec.type = static_cast<RecordType>(type);
  if (!br.done()) return std::nullopt;
  return rec;
}

Wal::Wal(SimDisk& disk, Scheduler& sched, WalOptions options, TraceSink* trace, std::string owner)
    : disk_(disk), sched_(sched), options_(options), trace_(trace ? trace : &NullTrace::instance()),
      owner_(std::move(owner)) {}

Wal::ScanResult Wal::open() {
  ScanResult result;
  load_watermarks();
  load_skipped();

  // One pass over the physical log. A bad record ends the stream: the rest of
  // its segment and every later segment are discarded.
  std::vector<uint64_t> seg_ids;
  for (const auto& [id, _] : disk_.segments()) seg_ids.push_back(id);
  bool truncated = false;
  for (uint64_t id : seg_ids) {
    if (truncated) {
      disk_.drop_segment(id);
      continue;
    }
    const Bytes& bytes = disk_.segments().at(id);
    ByteReader r(bytes);
    SegmentInfo& info = segments_[id];
    while (r.remaining() > 0) {
      const size_t start = r.position();
      auto rec = decode_record(r);
      if (!rec) {
        disk_.truncate_segment(id, start);
        truncated = true;
        result.corrupt = true;
        break;
      }
      info.size = r.position();
      auto& m = info.max_lsn[rec->cohort];
      m = std::max(m, rec->lsn);
      if (rec->is_write()) {
        auto& mw = info.max_write_lsn[rec->cohort];
        mw = std::max(mw, rec->lsn);
        // A record that reappears (re-logged after a torn tail) keeps its
        // first copy; LSNs are unique per cohort.
        if (!writes_[rec->cohort].contains(rec->lsn)) {
          writes_[rec->cohort][rec->lsn] = *rec;
          segment_of_[rec->cohort][rec->lsn] = id;
        }
        auto& t = tail_[rec->cohort];
        t = std::max(t, rec->lsn);
      }
      result.records.push_back(std::move(*rec));
    }
    if (segments_[id].size == 0) segments_.erase(id);
  }
  // Appends continue in a fresh segment so a truncated tail is never reused.
  active_segment_ = seg_ids.empty() ? 0 : seg_ids.back() + 1;
  for (auto& [cohort, t] : tail_) {
    t = std::max(t, reclaimed_through(cohort));
  }
  for (const auto& [cohort, r] : reclaimed_) {
    auto& t = tail_[cohort];
    t = std::max(t, r);
  }
  return result;
}

Status Wal::check_usable() const {
  if (disk_.failed()) return make_error(Code::kDiskFailed, owner_ + ": disk failed");
  return Status::ok();
}

void Wal::enqueue(const LogRecord& rec) {
  ByteWriter w;
  encode_record(w, rec);
  Bytes bytes = w.take();
  SegmentInfo* info = &segments_[active_segment_];
  if (info->size > 0 && info->size + bytes.size() > options_.segment_bytes) {
    ++active_segment_;
    info = &segments_[active_segment_];
  }
  info->size += bytes.size();
  auto& m = info->max_lsn[rec.cohort];
  m = std::max(m, rec.lsn);
  if (rec.is_write()) {
    auto& mw = info->max_write_lsn[rec.cohort];
    mw = std::max(mw, rec.lsn);
    writes_[rec.cohort][rec.lsn] = rec;
    segment_of_[rec.cohort][rec.lsn] = active_segment_;
    auto& t = tail_[rec.cohort];
    t = std::max(t, rec.lsn);
  }
  if (!buffer_.empty() && buffer_.back().first == active_segment_) {
    auto& b = buffer_.back().second;
    b.insert(b.end(), bytes.begin(), bytes.end());
  } else {
    buffer_.emplace_back(active_segment_, std::move(bytes));
  }
  ++buffer_records_;
}

Status Wal::append_forced(std::span<const LogRecord> records, DurableCallback done) {
  if (auto s = check_usable(); !s) return s;
  // Validate the whole batch before touching the buffer.
  std::map<CohortId, Lsn> tails;
  for (const auto& rec : records) {
    if (!rec.is_write()) {
      return make_error(Code::kStreamViolation, "forced append of a non-write record");
    }
    // Ordering is checked against the logical stream: a logically truncated
    // tail no longer counts, but its LSNs are never reused.
    auto it = tails.find(rec.cohort);
    Lsn tail = it != tails.end() ? it->second : std::max(last_lsn(rec.cohort), reclaimed_through(rec.cohort));
    if (rec.lsn <= tail || contains(rec.cohort, rec.lsn)) {
      return make_error(Code::kStreamViolation, owner_ + ": cohort " + std::to_string(rec.cohort) +
                                                    " lsn " + rec.lsn.to_string() +
                                                    " does not extend tail " + tail.to_string());
    }
    tails[rec.cohort] = rec.lsn;
  }
  for (const auto& rec : records) enqueue(rec);
  ++force_requests_;
  waiting_.push_back(PendingRequest{std::move(done)});
  maybe_start_force();
  return Status::ok();
}

Status Wal::append_non_forced(const LogRecord& marker) {
  if (auto s = check_usable(); !s) return s;
  if (marker.is_write()) return make_error(Code::kStreamViolation, "non-forced append of a write");
  if (marker.lsn > stream_tail(marker.cohort)) {
    return make_error(Code::kStreamViolation, owner_ + ": marker " + marker.lsn.to_string() +
                                                  " beyond greatest write " +
                                                  stream_tail(marker.cohort).to_string());
  }
  enqueue(marker);
  return Status::ok();
}

void Wal::maybe_start_force() {
  if (in_flight_ || start_scheduled_ || waiting_.empty()) return;
  start_scheduled_ = true;
  sched_.schedule(options_.group_commit_window, [this] {
    start_scheduled_ = false;
    start_force();
  });
}

void Wal::start_force() {
  if (in_flight_ || waiting_.empty()) return;
  in_flight_ = true;
  auto chunks = std::move(buffer_);
  buffer_.clear();
  const size_t records = buffer_records_;
  buffer_records_ = 0;
  auto requests = std::move(waiting_);
  waiting_.clear();
  size_t bytes = 0;
  for (const auto& c : chunks) bytes += c.second.size();
  in_flight_chunks_ = chunks;
  Tick duration = options_.force_base_ticks;
  if (options_.disk_bytes_per_tick > 0) {
    duration += static_cast<Tick>((bytes + options_.disk_bytes_per_tick - 1) / options_.disk_bytes_per_tick);
  }
  const Tick started = sched_.now();
  sched_.schedule(duration, [this, chunks = std::move(chunks), requests = std::move(requests), bytes,
                             records, started]() mutable {
    finish_force(std::move(chunks), std::move(requests), bytes, records, started);
  });
}

void Wal::finish_force(std::vector<std::pair<uint64_t, Bytes>> chunks, std::vector<PendingRequest> requests,
                       size_t bytes, size_t records, Tick started) {
  for (const auto& [seg, b] : chunks) disk_.append_segment(seg, b);
  disk_.note_physical_force();
  ++physical_forces_;
  in_flight_ = false;
  in_flight_chunks_.clear();
  trace_->record(owner_, "log_force",
                 {{"records", records},
                  {"bytes", bytes},
                  {"requests", requests.size()},
                  {"started", started},
                  {"duration", sched_.now() - started}});
  for (auto& r : requests) {
    if (r.done) r.done(Status::ok());
  }
  maybe_start_force();
}

Result<std::vector<LogRecord>> Wal::read_from(CohortId cohort, Lsn after) const {
  const Lsn reclaimed = reclaimed_through(cohort);
  if (after < reclaimed) {
    return make_error(Code::kSegmentRolledOver, first_available(cohort).to_string());
  }
  std::vector<LogRecord> out;
  auto it = writes_.find(cohort);
  if (it == writes_.end()) return out;
  const auto& skip = skipped(cohort);
  for (auto w = it->second.upper_bound(after); w != it->second.end(); ++w) {
    if (skip.contains(w->first)) continue;
    out.push_back(w->second);
  }
  return out;
}

Status Wal::logical_truncate(CohortId cohort, const std::set<Lsn>& skipped) {
  if (skipped.empty()) return Status::ok();
  if (auto s = check_usable(); !s) return s;
  for (const Lsn& l : skipped) {
    if (!contains(cohort, l)) {
      return make_error(Code::kPrecondition, "skipped lsn " + l.to_string() + " not in the log");
    }
  }
  auto& list = skipped_[cohort];
  const size_t before = list.size();
  list.insert(skipped.begin(), skipped.end());
  if (list.size() != before) persist_skipped(cohort);
  nlohmann::json lsns = nlohmann::json::array();
  for (const auto& l : skipped) lsns.push_back(l.to_string());
  trace_->record(owner_, "truncate", {{"cohort", cohort}, {"lsns", std::move(lsns)}});
  return Status::ok();
}

Status Wal::roll_over(CohortId cohort, Lsn up_to) {
  if (up_to.is_zero()) return Status::ok();
  if (auto s = check_usable(); !s) return s;
  auto& wm = watermark_[cohort];
  wm = std::max(wm, up_to);

  // Only sealed, fully durable segments at the head of the log can go.
  uint64_t limit = active_segment_;
  for (const auto& c : buffer_) limit = std::min(limit, c.first);
  for (const auto& c : in_flight_chunks_) limit = std::min(limit, c.first);

  Status status = Status::ok();
  bool changed = false;
  while (!segments_.empty()) {
    auto seg = segments_.begin();
    if (seg->first >= limit) break;
    bool reclaimable = true;
    CohortId holder = 0;
    for (const auto& [c, max] : seg->second.max_lsn) {
      auto w = watermark_.find(c);
      if (w == watermark_.end() || max > w->second) {
        reclaimable = false;
        holder = c;
        break;
      }
    }
    if (!reclaimable) {
      auto mine = seg->second.max_lsn.find(cohort);
      if (mine != seg->second.max_lsn.end() && mine->second <= up_to && holder != cohort) {
        status = make_error(Code::kRetentionViolation, "segment " + std::to_string(seg->first) +
                                                           " still needed by cohort " + std::to_string(holder));
      }
      break;
    }
    for (const auto& [c, max] : seg->second.max_write_lsn) {
      auto& r = reclaimed_[c];
      r = std::max(r, max);
    }
    const uint64_t id = seg->first;
    for (auto& [c, where] : segment_of_) {
      for (auto it = where.begin(); it != where.end();) {
        if (it->second == id) {
          writes_[c].erase(it->first);
          it = where.erase(it);
        } else {
          ++it;
        }
      }
    }
    disk_.drop_segment(id);
    segments_.erase(seg);
    changed = true;
  }
  if (changed) {
    // Skipped entries are collected together with their segments.
    for (auto& [c, list] : skipped_) {
      const Lsn r = reclaimed_through(c);
      const size_t before = list.size();
      std::erase_if(list, [&](const Lsn& l) { return l <= r; });
      if (list.size() != before) persist_skipped(c);
    }
    trace_->record(owner_, "roll_over", {{"cohort", cohort}, {"up_to", up_to.to_string()},
                                         {"segments", segments_.size()}});
  }
  persist_watermarks();
  return status;
}

bool Wal::contains(CohortId cohort, Lsn lsn) const { return find(cohort, lsn) != nullptr; }

const LogRecord* Wal::find(CohortId cohort, Lsn lsn) const {
  auto it = writes_.find(cohort);
  if (it == writes_.end()) return nullptr;
  auto w = it->second.find(lsn);
  return w == it->second.end() ? nullptr : &w->second;
}

Lsn Wal::stream_tail(CohortId cohort) const {
  auto it = tail_.find(cohort);
  return it == tail_.end() ? reclaimed_through(cohort) : it->second;
}

Lsn Wal::last_lsn(CohortId cohort) const {
  auto it = writes_.find(cohort);
  const auto& skip = skipped(cohort);
  if (it != writes_.end()) {
    for (auto w = it->second.rbegin(); w != it->second.rend(); ++w) {
      if (!skip.contains(w->first)) return w->first;
    }
  }
  return reclaimed_through(cohort);
}

const std::set<Lsn>& Wal::skipped(CohortId cohort) const {
  static const std::set<Lsn> kEmpty;
  auto it = skipped_.find(cohort);
  return it == skipped_.end() ? kEmpty : it->second;
}

Lsn Wal::reclaimed_through(CohortId cohort) const {
  auto it = reclaimed_.find(cohort);
  return it == reclaimed_.end() ? Lsn() : it->second;
}

Lsn Wal::first_available(CohortId cohort) const {
  const Lsn r = reclaimed_through(cohort);
  auto it = writes_.find(cohort);
  if (it != writes_.end()) {
    auto w = it->second.upper_bound(r);
    if (w != it->second.end()) return w->first;
  }
  return r.next();
}

std::string Wal::skipped_blob(CohortId cohort) const { return "wal/skipped/" + std::to_string(cohort); }

void Wal::persist_skipped(CohortId cohort) {
  // Whole list rewritten as one batch; the blob put is atomic.
  ByteWriter w;
  const auto& list = skipped_[cohort];
  w.put_u32(static_cast<uint32_t>(list.size()));
  for (const auto& l : list) w.put_u64(l.encode());
  w.put_u32(crc32_of(w.buf()));
  disk_.put_blob(skipped_blob(cohort), w.take());
}

void Wal::load_skipped() {
  for (const auto& name : disk_.blob_names("wal/skipped/")) {
    const CohortId cohort = static_cast<CohortId>(std::stoul(name.substr(std::string("wal/skipped/").size())));
    auto blob = disk_.get_blob(name);
    if (!blob || blob->size() < 8) continue;
    ByteReader r(*blob);
    const uint32_t n = r.get_u32();
    std::set<Lsn> list;
    for (uint32_t i = 0; i < n && r.ok(); ++i) list.insert(Lsn::decode(r.get_u64()));
    const size_t body = r.position();
    const uint32_t crc = r.get_u32();
    if (!r.ok() || crc != crc32_of(std::span<const uint8_t>(blob->data(), body))) continue;
    skipped_[cohort] = std::move(list);
  }
}

void Wal::persist_watermarks() {
  ByteWriter w;
  w.put_u32(static_cast<uint32_t>(watermark_.size()));
  for (const auto& [c, l] : watermark_) {
    w.put_u32(c);
    w.put_u64(l.encode());
    w.put_u64(reclaimed_through(c).encode());
  }
  disk_.put_blob(kWatermarkBlob, w.take());
}

void Wal::load_watermarks() {
  auto blob = disk_.get_blob(kWatermarkBlob);
  if (!blob) return;
  ByteReader r(*blob);
  const uint32_t n = r.get_u32();
  for (uint32_t i = 0; i < n && r.ok(); ++i) {
    const CohortId c = r.get_u32();
    const Lsn wm = Lsn::decode(r.get_u64());
    const Lsn rec = Lsn::decode(r.get_u64());
    if (!r.ok()) break;
    watermark_[c] = wm;
    if (!rec.is_zero()) reclaimed_[c] = rec;
  }
}

}  // namespace spinnaker
