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

std::vector<std::string> lsn_strings(const std::set<Lsn>& lsns) {
  std::vector<std::string> out;
  for (const auto& l : lsns) out.push_back(l.to_string());
  return out;
}

}  // namespace

// ---------------------------------------------------------------- election glue

std::optional<Candidacy> CohortReplica::candidacy() const {
  if (!voter_ || role_ == Role::kRecovering) return std::nullopt;
  Candidacy c;
  c.host = env_.host;
  c.log_epoch = log_epoch_;
  c.last = last();
  return c;
}

void CohortReplica::persist_log_epoch(uint32_t e) {
  store_log_epoch(*env_.disk, cohort_, e);
  log_epoch_ = e;
  voter_ = true;
}

void CohortReplica::on_won(uint32_t e) {
  role_ = Role::kLeader;
  epoch_ = e;
  leader_ = env_.self;
  persist_log_epoch(e);
  ++generation_;
  takeover_ = true;
  write_open_ = false;
  queue_.clear();
  deferred_.clear();
  pending_versions_.clear();
  acked_.clear();
  synced_.clear();
  fences_.clear();
  sync_from_.clear();
  follower_queue_.clear();
  phase_ = SyncPhase::kNone;

  // Everything after our commit point is re-proposed under its original LSN.
  if (auto tail = env_.wal->read_from(cohort_, cmt_)) {
    for (auto& rec : *tail) {
      for (const auto& c : rec.op.columns) {
        auto& v = pending_versions_[CellKey{rec.op.key, c.column}];
        v = std::max(v, c.version);
      }
      queue_[rec.lsn] = Pending{std::move(rec.op), false, {}};
    }
  }
  reproposed_ = queue_.size();
  takeover_target_ = last();
  next_seq_ = takeover_target_.seq;
  trace("takeover", {{"epoch", e},
                     {"cmt", cmt_.to_string()},
                     {"lst", takeover_target_.to_string()},
                     {"reproposed", reproposed_}});
  // Our own tail may still be in a force started while we were a follower.
  const uint64_t gen = generation_;
  env_.wal->append_forced(std::span<const LogRecord>(), guard([this, gen](Status st) {
    if (!st || gen != generation_) return;
    for (auto& [_, p] : queue_) p.durable = true;
    try_commit();
  }));
}

void CohortReplica::on_follow(const std::string& leader_host) {
  auto node = env_.resolve(leader_host);
  if (!node || *node == env_.self) return;
  if (role_ == Role::kLeader) step_down("another leader elected");
  role_ = Role::kFollower;
  leader_ = node;
  trace("role", {{"role", role_name(role_)}, {"leader", leader_host}});
  request_sync();
}

void CohortReplica::on_leader_lost() {
  if (role_ == Role::kLeader) step_down("leader znode lost");
  role_ = Role::kCandidate;
  leader_.reset();
  phase_ = SyncPhase::kNone;
  follower_queue_.clear();
  trace("role", {{"role", role_name(role_)}});
}

// ---------------------------------------------------------------- follower side

void CohortReplica::request_sync() {
  if (role_ != Role::kFollower || !leader_) return;
  phase_ = SyncPhase::kRequested;
  follower_queue_.clear();
  ++sync_attempt_;
  send(*leader_, MsgType::kCatchUpRequest, CatchUpRequestMsg{cmt_, last()});
  trace("sync_request", {{"cmt", cmt_.to_string()}, {"lst", last().to_string()}});
  arm_sync_retry();
}

void CohortReplica::arm_sync_retry() {
  const uint64_t attempt = sync_attempt_;
  env_.sched->schedule(options_.sync_retry, guard([this, attempt] {
    if (attempt == sync_attempt_ && role_ == Role::kFollower && phase_ != SyncPhase::kActive) request_sync();
  }));
}

void CohortReplica::reconcile_committed(const SyncBatchMsg& b, std::function<void()> then) {
  Wal& wal = *env_.wal;
  const Lsn lo = std::max(b.from, cmt_);
  std::set<Lsn> drop;
  std::vector<LogRecord> missing;
  if (b.through > lo) {
    const std::set<Lsn> keep(b.lsns.begin(), b.lsns.end());
    if (auto mine = wal.read_from(cohort_, lo)) {
      for (const auto& rec : *mine) {
        if (rec.lsn > b.through) break;
        if (!keep.contains(rec.lsn)) drop.insert(rec.lsn);
      }
    }
    for (const auto& w : b.writes) {
      if (w.lsn <= lo || wal.contains(cohort_, w.lsn)) continue;
      missing.push_back(LogRecord::write(cohort_, w.lsn, w.op));
    }
  }
  if (!drop.empty()) {
    wal.logical_truncate(cohort_, drop);
    trace("truncate", {{"lsns", lsn_strings(drop)}});
  }
  for (const auto& w : b.writes) {
    if (w.lsn > cmt_) apply_committed(w.op, w.lsn);
  }
  auto s = wal.append_forced(missing, guard([then = std::move(then)](Status st) {
    if (st) then();
  }));
  if (!s) trace("log_error", {{"error", s.to_string()}});
  if (b.through > cmt_) {
    cmt_ = b.through;
    note_commit_point();
    maybe_checkpoint();
  }
}

void CohortReplica::on_sync_data(NodeId from, const Message& m) {
  if (role_ != Role::kFollower || leader_ != from || phase_ != SyncPhase::kRequested) return;
  const auto& b = m.as<SyncBatchMsg>();
  trace("sync_data", {{"from", b.from.to_string()}, {"through", b.through.to_string()}, {"writes", b.writes.size()}});
  const uint64_t attempt = sync_attempt_;
  phase_ = SyncPhase::kAwaitDone;
  reconcile_committed(b, [this, attempt, from] {
    if (attempt != sync_attempt_ || phase_ != SyncPhase::kAwaitDone) return;
    send(from, MsgType::kCatchUpAck, CatchUpAckMsg{cmt_});
  });
}

void CohortReplica::on_sync_done(NodeId from, const Message& m) {
  if (role_ != Role::kFollower || leader_ != from || phase_ != SyncPhase::kAwaitDone) return;
  const auto& b = m.as<SyncBatchMsg>();
  const uint64_t attempt = sync_attempt_;
  const uint32_t e = m.epoch;
  Wal& wal = *env_.wal;
  // Anything we hold past the leader's commit point that is not in its
  // tail was never committed. Drop it before logging the committed delta.
  const std::set<Lsn> keep(b.pending_lsns.begin(), b.pending_lsns.end());
  std::set<Lsn> drop;
  if (auto mine = wal.read_from(cohort_, std::max(cmt_, b.through))) {
    for (const auto& rec : *mine) {
      if (!keep.contains(rec.lsn)) drop.insert(rec.lsn);
    }
  }
  if (!drop.empty()) {
    wal.logical_truncate(cohort_, drop);
    trace("truncate", {{"lsns", lsn_strings(drop)}});
  }
  // The delta's records are forced together with the tail below.
  reconcile_committed(b, [] {});
  std::map<Lsn, const WriteOp*> shipped;
  for (const auto& w : b.pending) shipped[w.lsn] = &w.op;
  std::vector<LogRecord> missing;
  follower_queue_.clear();
  for (const Lsn& lsn : b.pending_lsns) {
    if (lsn <= cmt_) continue;
    if (const LogRecord* rec = wal.find(cohort_, lsn); rec && !wal.skipped(cohort_).contains(lsn)) {
      follower_queue_[lsn] = rec->op;
      continue;
    }
    auto it = shipped.find(lsn);
    if (it == shipped.end()) {
      trace("sync_incomplete", {{"lsn", lsn.to_string()}});
      request_sync();
      return;
    }
    follower_queue_[lsn] = *it->second;
    missing.push_back(LogRecord::write(cohort_, lsn, *it->second));
  }
  trace(m.type == MsgType::kRePropose ? "repropose_recv" : "sync_done",
        {{"delta", b.writes.size()}, {"pending", b.pending_lsns.size()}, {"shipped", b.pending.size()}});
  auto s = wal.append_forced(missing, guard([this, attempt, from, e](Status st) {
    if (!st || attempt != sync_attempt_ || phase_ != SyncPhase::kAwaitDone) return;
    durable_ = last();
    persist_log_epoch(e);
    epoch_ = e;
    phase_ = SyncPhase::kActive;
    send(from, MsgType::kSyncAck, SyncAckMsg{last()});
    trace("synced", {{"epoch", e}, {"cmt", cmt_.to_string()}, {"lst", last().to_string()}});
  }));
  if (!s) trace("log_error", {{"error", s.to_string()}});
}

// ---------------------------------------------------------------- leader side

void CohortReplica::on_sync_request(NodeId from, const Message& m) {
  if (role_ != Role::kLeader) return;
  const auto& req = m.as<CatchUpRequestMsg>();
  synced_.erase(from);
  acked_.erase(from);
  lift_fence(from);
  sync_from_[from] = req.committed;
  SyncBatchMsg b;
  b.from = req.committed;
  b.through = cmt_;
  if (req.committed < cmt_) {
    auto cw = committed_writes_since(*env_.wal, store_, cohort_, req.committed, cmt_);
    b.writes = std::move(cw.writes);
    b.lsns = std::move(cw.lsns);
  }
  trace("sync_serve", {{"follower", from},
                       {"from", b.from.to_string()},
                       {"through", b.through.to_string()},
                       {"writes", b.writes.size()}});
  send(from, MsgType::kCatchUpData, std::move(b));
  if (takeover_) send(from, MsgType::kTakeoverCommit, CommitMsg{cmt_});
}

void CohortReplica::on_sync_ack_data(NodeId from, const Message& m) {
  if (role_ != Role::kLeader) return;
  auto started = sync_from_.find(from);
  if (started == sync_from_.end()) return;
  const Lsn through = m.as<CatchUpAckMsg>().through;
  const Lsn follower_cmt = std::max(started->second, through);
  SyncBatchMsg b;
  b.from = through;
  b.through = cmt_;
  if (through < cmt_) {
    auto cw = committed_writes_since(*env_.wal, store_, cohort_, through, cmt_);
    b.writes = std::move(cw.writes);
    b.lsns = std::move(cw.lsns);
  }
  for (const auto& [lsn, p] : queue_) {
    b.pending_lsns.push_back(lsn);
    if (!options_.ship_missing_only || lsn > follower_cmt) b.pending.push_back(LoggedWrite{p.op, lsn});
  }
  if (takeover_) {
    trace("repropose", {{"follower", from}, {"records", b.pending.size()}, {"pending", b.pending_lsns.size()}});
    send(from, MsgType::kRePropose, std::move(b));
  } else {
    fence(from);
    trace("sync_finish", {{"follower", from}, {"delta", b.writes.size()}, {"pending", b.pending_lsns.size()}});
    send(from, MsgType::kCatchUpDone, std::move(b));
  }
}

void CohortReplica::on_sync_ack(NodeId from, const Message& m) {
  if (role_ != Role::kLeader || m.epoch != epoch_) return;
  synced_.insert(from);
  auto& a = acked_[from];
  a = std::max(a, m.as<SyncAckMsg>().last);
  sync_from_.erase(from);
  trace("follower_synced", {{"follower", from}, {"lst", a.to_string()}});
  lift_fence(from);
  try_commit();
}

void CohortReplica::fence(NodeId follower) {
  const uint64_t id = ++fence_counter_;
  fences_[follower] = id;
  trace("fence", {{"follower", follower}, {"on", true}});
  env_.sched->schedule(options_.fence_timeout, guard([this, follower, id] {
    auto it = fences_.find(follower);
    if (it != fences_.end() && it->second == id) lift_fence(follower);
  }));
}

void CohortReplica::lift_fence(NodeId follower) {
  if (fences_.erase(follower) == 0) return;
  trace("fence", {{"follower", follower}, {"on", false}});
  drain_blocked();
}

void CohortReplica::finish_takeover() {
  takeover_ = false;
  write_open_ = true;
  broadcast(MsgType::kCommit, CommitMsg{cmt_});
  trace("write_open", {{"epoch", epoch_}, {"cmt", cmt_.to_string()}, {"reproposed", reproposed_}});
  const uint64_t gen = generation_;
  env_.sched->schedule(options_.commit_period, guard([this, gen] { commit_tick(gen); }));
  drain_blocked();
}

}  // namespace spinnaker
