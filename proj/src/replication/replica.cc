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

#include "spinnaker/replication/replica.h"

#include <algorithm>

namespace spinnaker {

const char* role_name(Role role) {
  switch (role) {
    case Role::kRecovering: return "recovering";
    case Role::kCandidate: return "candidate";
    case Role::kFollower: return "follower";
    case Role::kLeader: return "leader";
  }
  return "?";
}

CohortReplica::CohortReplica(CohortId cohort, std::vector<NodeId> members, ReplicaEnv env, ReplicaOptions options)
    : cohort_(cohort), members_(std::move(members)), env_(std::move(env)), options_(options),
      store_(cohort, env_.disk, env_.trace, env_.host), alive_(std::make_shared<bool>(true)) {
  if (!env_.trace) env_.trace = &NullTrace::instance();
  Election::Hooks hooks;
  hooks.candidacy = [this] { return candidacy(); };
  hooks.won = [this](uint32_t e) { on_won(e); };
  hooks.follow = [this](const std::string& host) { on_follow(host); };
  hooks.leader_lost = [this] { on_leader_lost(); };
  election_ = std::make_unique<Election>(cohort_, env_.host, *env_.coord, env_.session, *env_.sched, env_.trace,
                                         std::move(hooks), options_.election_retry);
}

CohortReplica::~CohortReplica() { *alive_ = false; }

Lsn CohortReplica::last() const { return env_.wal->last_lsn(cohort_); }

bool CohortReplica::serving() const {
  if (role_ == Role::kLeader) return write_open_;
  return role_ == Role::kFollower && phase_ == SyncPhase::kActive;
}

void CohortReplica::trace(std::string_view kind, nlohmann::json fields) {
  fields["node"] = env_.host;
  fields["cohort"] = cohort_;
  env_.trace->record("replica", kind, std::move(fields));
}

void CohortReplica::send(NodeId to, MsgType type, MessageBody body) {
  env_.send(to, Message{type, cohort_, epoch_, std::move(body)});
}

void CohortReplica::broadcast(MsgType type, const MessageBody& body) {
  for (NodeId f : synced_) send(f, type, body);
}

void CohortReplica::start() {
  role_ = Role::kCandidate;
  trace("role", {{"role", role_name(role_)}, {"epoch", epoch_}});
  election_->start();
}

void CohortReplica::on_message(NodeId from, const Message& m) {
  switch (m.type) {
    case MsgType::kPropose: on_propose(from, m); break;
    case MsgType::kAck: on_ack(from, m); break;
    case MsgType::kCommit:
    case MsgType::kTakeoverCommit: on_commit(from, m); break;
    case MsgType::kCatchUpRequest: on_sync_request(from, m); break;
    case MsgType::kCatchUpData: on_sync_data(from, m); break;
    case MsgType::kCatchUpAck: on_sync_ack_data(from, m); break;
    case MsgType::kCatchUpDone:
    case MsgType::kRePropose: on_sync_done(from, m); break;
    case MsgType::kSyncAck: on_sync_ack(from, m); break;
    default: break;
  }
}

void CohortReplica::on_peer_down(NodeId peer) {
  if (role_ != Role::kLeader) return;
  synced_.erase(peer);
  acked_.erase(peer);
  sync_from_.erase(peer);
  lift_fence(peer);
  if (write_open_ && synced_.empty() && sync_from_.empty() && fences_.empty()) {
    auto blocked = std::move(blocked_);
    blocked_.clear();
    for (auto& b : blocked) {
      ClientResponseMsg resp;
      resp.code = Code::kUnavailable;
      resp.detail = "no quorum";
      b.reply(std::move(resp));
    }
  }
}

// ---------------------------------------------------------------- clients

void CohortReplica::handle_client(const ClientRequestMsg& req, Reply reply) {
  if (req.op == ClientOp::kGet) return serve_read(req, std::move(reply));
  WriteOp op;
  op.key = req.key;
  switch (req.op) {
    case ClientOp::kPut: op.kind = OpKind::kPut; break;
    case ClientOp::kDelete: op.kind = OpKind::kDelete; break;
    case ClientOp::kConditionalPut: op.kind = OpKind::kConditionalPut; break;
    case ClientOp::kConditionalDelete: op.kind = OpKind::kConditionalDelete; break;
    case ClientOp::kGet: break;
  }
  for (auto c : req.columns) {
    if (op.is_delete()) c.value.reset();
    if (!op.is_conditional()) c.expected_version = 0;
    c.version = 0;
    op.columns.push_back(std::move(c));
  }
  leader_write(std::move(op), [id = req.request_id, reply = std::move(reply)](ClientResponseMsg resp) {
    resp.request_id = id;
    reply(std::move(resp));
  });
}

void CohortReplica::serve_read(const ClientRequestMsg& req, Reply reply) {
  ClientResponseMsg resp;
  resp.request_id = req.request_id;
  if (req.consistent) {
    if (role_ != Role::kLeader) {
      resp.code = Code::kNotLeader;
      return reply(std::move(resp));
    }
    if (!write_open_) {
      resp.code = Code::kUnavailable;
      resp.detail = "takeover in progress";
      return reply(std::move(resp));
    }
  } else if (!voter_) {
    // A wiped replica has nothing committed to offer until it has synced.
    resp.code = Code::kUnavailable;
    resp.detail = "replica not recovered";
    return reply(std::move(resp));
  }
  bool any = false;
  for (const auto& c : req.columns) {
    auto cell = store_.get(req.key, c.column);
    if (cell) {
      any = true;
      resp.values.push_back(cell->value);
      resp.versions.push_back(cell->version);
    } else {
      resp.values.push_back(std::nullopt);
      resp.versions.push_back(0);
    }
  }
  if (!any) resp.code = Code::kNotFound;
  nlohmann::json columns = nlohmann::json::array();
  for (const auto& c : req.columns) columns.push_back(c.column);
  trace("read", {{"key", req.key}, {"columns", columns}, {"strong", req.consistent}, {"versions", resp.versions}});
  reply(std::move(resp));
}

// ---------------------------------------------------------------- leader

void CohortReplica::leader_write(WriteOp op, Reply reply) {
  if (role_ != Role::kLeader) {
    ClientResponseMsg resp;
    resp.code = Code::kNotLeader;
    return reply(std::move(resp));
  }
  if (write_open_ && synced_.empty() && sync_from_.empty() && fences_.empty()) {
    // No follower can acknowledge; refuse rather than hold the write.
    ClientResponseMsg resp;
    resp.code = Code::kUnavailable;
    resp.detail = "no quorum";
    return reply(std::move(resp));
  }
  if (!write_open_ || !fences_.empty()) {
    blocked_.push_back(Blocked{std::move(op), std::move(reply)});
    return;
  }
  assign(std::move(op), std::move(reply));
}

uint64_t CohortReplica::projected_version(const std::string& key, const std::string& column) const {
  auto it = pending_versions_.find(CellKey{key, column});
  if (it != pending_versions_.end()) return it->second;
  return store_.current_version(key, column);
}

void CohortReplica::assign(WriteOp op, Reply reply) {
  ClientResponseMsg resp;
  if (!op.valid()) {
    resp.code = Code::kPrecondition;
    resp.detail = "malformed write";
    return reply(std::move(resp));
  }
  std::vector<uint64_t> current;
  for (const auto& c : op.columns) current.push_back(projected_version(op.key, c.column));
  if (op.is_conditional()) {
    for (size_t i = 0; i < op.columns.size(); ++i) {
      if (op.columns[i].expected_version != current[i]) {
        trace("condition_failed", {{"key", op.key}, {"column", op.columns[i].column}, {"current", current[i]}});
        resp.code = Code::kConditionCheckFailed;
        resp.detail = "current version " + std::to_string(current[i]);
        resp.versions = current;
        if (pending_versions_.contains(CellKey{op.key, op.columns[i].column})) {
          deferred_.emplace(queue_.rbegin()->first, std::make_pair(std::move(reply), std::move(resp)));
          return;
        }
        return reply(std::move(resp));
      }
    }
  }
  for (size_t i = 0; i < op.columns.size(); ++i) {
    op.columns[i].version = current[i] + 1;
    pending_versions_[CellKey{op.key, op.columns[i].column}] = current[i] + 1;
  }
  const Lsn lsn(epoch_, ++next_seq_);
  LogRecord rec = LogRecord::write(cohort_, lsn, op);
  queue_[lsn] = Pending{std::move(op), false, std::move(reply)};
  trace("propose", {{"lsn", lsn.to_string()}, {"key", rec.op.key}});
  // Local force and proposes go out together.
  auto s = env_.wal->append_forced(rec, guard([this, lsn](Status st) {
    if (!st) return;
    auto it = queue_.find(lsn);
    if (it == queue_.end()) return;
    it->second.durable = true;
    try_commit();
  }));
  if (!s) trace("log_error", {{"error", s.to_string()}});
  broadcast(MsgType::kPropose, ProposeMsg{std::move(rec), options_.piggyback_commit ? cmt_ : Lsn()});
}

void CohortReplica::try_commit() {
  if (role_ != Role::kLeader) return;
  bool advanced = false;
  while (!queue_.empty()) {
    auto it = queue_.begin();
    const Lsn lsn = it->first;
    if (!it->second.durable) break;
    const bool acked = std::any_of(synced_.begin(), synced_.end(), [&](NodeId f) {
      auto a = acked_.find(f);
      return a != acked_.end() && a->second >= lsn;
    });
    if (!acked) break;
    Pending p = std::move(it->second);
    queue_.erase(it);
    apply_committed(p.op, lsn);
    cmt_ = lsn;
    advanced = true;
    std::vector<uint64_t> versions;
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : p.op.columns) {
      versions.push_back(c.version);
      cols.push_back({{"column", c.column}, {"version", c.version}});
    }
    trace("commit", {{"lsn", lsn.to_string()}, {"key", p.op.key}, {"columns", cols}});
    if (p.reply) {
      ClientResponseMsg resp;
      resp.versions = std::move(versions);
      p.reply(std::move(resp));
    }
  }
  if (advanced) {
    note_commit_point();
    maybe_checkpoint();
    while (!deferred_.empty() && deferred_.begin()->first <= cmt_) {
      auto node = deferred_.extract(deferred_.begin());
      node.mapped().first(std::move(node.mapped().second));
    }
  }
  if (takeover_ && queue_.empty() && !synced_.empty()) finish_takeover();
}

void CohortReplica::apply_committed(const WriteOp& op, Lsn lsn) {
  store_.apply_write(op, lsn);
  for (const auto& c : op.columns) {
    auto it = pending_versions_.find(CellKey{op.key, c.column});
    if (it != pending_versions_.end() && it->second <= c.version) pending_versions_.erase(it);
  }
}

void CohortReplica::note_commit_point() {
  auto s = env_.wal->append_non_forced(LogRecord::marker(cohort_, cmt_));
  if (!s) trace("log_error", {{"error", s.to_string()}});
}

void CohortReplica::maybe_checkpoint() {
  if (options_.flush_threshold == 0 || store_.memtable_entries() < options_.flush_threshold) return;
  if (!store_.flush_memtable()) return;
  // Other cohorts sharing the segments may still need them; that is normal.
  env_.wal->roll_over(cohort_, store_.checkpoint_lsn());
}

void CohortReplica::commit_tick(uint64_t generation) {
  if (role_ != Role::kLeader || generation != generation_) return;
  broadcast(MsgType::kCommit, CommitMsg{cmt_});
  env_.sched->schedule(options_.commit_period, guard([this, generation] { commit_tick(generation); }));
}

void CohortReplica::on_ack(NodeId from, const Message& m) {
  if (role_ != Role::kLeader || m.epoch != epoch_ || !synced_.contains(from)) return;
  auto& a = acked_[from];
  a = std::max(a, m.as<AckMsg>().lsn);
  try_commit();
}

void CohortReplica::drain_blocked() {
  while (role_ == Role::kLeader && write_open_ && fences_.empty() && !blocked_.empty()) {
    Blocked b = std::move(blocked_.front());
    blocked_.pop_front();
    assign(std::move(b.op), std::move(b.reply));
  }
}

void CohortReplica::step_down(const char* why) {
  trace("step_down", {{"reason", why}, {"epoch", epoch_}});
  for (auto& b : blocked_) {
    ClientResponseMsg resp;
    resp.code = Code::kNotLeader;
    b.reply(std::move(resp));
  }
  blocked_.clear();
  deferred_.clear();
  queue_.clear();
  pending_versions_.clear();
  synced_.clear();
  acked_.clear();
  fences_.clear();
  sync_from_.clear();
  write_open_ = false;
  takeover_ = false;
  ++generation_;
  role_ = Role::kCandidate;
  leader_.reset();
}

// ---------------------------------------------------------------- follower

void CohortReplica::on_propose(NodeId from, const Message& m) {
  if (role_ == Role::kLeader) {
    if (m.epoch > epoch_) step_down("newer epoch proposing");
    return;
  }
  const auto& p = m.as<ProposeMsg>();
  const Lsn lsn = p.record.lsn;
  if (m.epoch < epoch_) {
    trace("reject", {{"error", code_name(Code::kStaleEpoch)}, {"lsn", lsn.to_string()}, {"epoch", epoch_}});
    return;
  }
  if (phase_ != SyncPhase::kActive || leader_ != from || m.epoch != epoch_) return;
  const Lsn tail = last();
  if (lsn <= tail) {
    // A repeated proposal: acknowledge again once it is durable, no new force.
    if (env_.wal->contains(cohort_, lsn) && lsn <= durable_) send(from, MsgType::kAck, AckMsg{durable_});
    return;
  }
  if (lsn.seq != tail.seq + 1) {
    trace("reject", {{"error", code_name(Code::kGapDetected)}, {"lsn", lsn.to_string()}, {"lst", tail.to_string()}});
    request_sync();
    return;
  }
  follower_queue_[lsn] = p.record.op;
  const uint32_t e = epoch_;
  auto s = env_.wal->append_forced(p.record, guard([this, lsn, from, e](Status st) {
    if (!st) return;
    durable_ = std::max(durable_, lsn);
    if (phase_ == SyncPhase::kActive && leader_ == from && epoch_ == e) send(from, MsgType::kAck, AckMsg{lsn});
  }));
  if (!s) {
    trace("log_error", {{"error", s.to_string()}});
    return;
  }
  if (!p.committed.is_zero()) follower_commit(p.committed);
}

void CohortReplica::on_commit(NodeId from, const Message& m) {
  if (role_ == Role::kLeader) {
    if (m.epoch > epoch_) step_down("newer epoch committing");
    return;
  }
  if (phase_ != SyncPhase::kActive || leader_ != from || m.epoch != epoch_) return;
  follower_commit(m.as<CommitMsg>().up_to);
}

void CohortReplica::follower_commit(Lsn up_to) {
  if (up_to <= cmt_) return;
  if (up_to > last()) {
    // Some proposal never reached us.
    request_sync();
    return;
  }
  while (!follower_queue_.empty() && follower_queue_.begin()->first <= up_to) {
    auto it = follower_queue_.begin();
    apply_committed(it->second, it->first);
    follower_queue_.erase(it);
  }
  cmt_ = up_to;
  note_commit_point();
  maybe_checkpoint();
  trace("follower_commit", {{"cmt", cmt_.to_string()}});
}

}  // namespace spinnaker
