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

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spinnaker/coordination/coordinator.h"
#include "spinnaker/election/election.h"
#include "spinnaker/recovery/recovery.h"
#include "spinnaker/replication/messages.h"
#include "spinnaker/storage/store.h"
#include "spinnaker/wal/wal.h"

namespace spinnaker {

enum class Role { kRecovering, kCandidate, kFollower, kLeader };
const char* role_name(Role role);

struct ReplicaOptions {
  Tick commit_period = 1000;
  // Carry the leader's commit point on every propose.
  bool piggyback_commit = false;
  // During takeover, ship each follower only the re-proposals it lacks.
  bool ship_missing_only = false;
  Tick fence_timeout = 500;
  // A follower re-sends its catch-up request when the leader stays silent.
  Tick sync_retry = 1000;
  Tick election_retry = 100;
  // Memtable size (cells) that triggers a flush and log rollover; 0 never.
  size_t flush_threshold = 0;
};

// What a replica needs from its node.
struct ReplicaEnv {
  NodeId self = 0;
  std::string host;
  Scheduler* sched = nullptr;
  Wal* wal = nullptr;
  SimDisk* disk = nullptr;
  Coordinator* coord = nullptr;
  SessionId session = 0;
  TraceSink* trace = nullptr;
  std::function<void(NodeId to, const Message& m)> send;
  std::function<std::optional<NodeId>(const std::string& host)> resolve;
};

// One node's replica of one cohort: the leader write path, the follower
// propose/commit path, catch-up in both directions, leader takeover and
// local recovery. Every handler runs to completion on the node's scheduler.
class CohortReplica {
 public:
  using Reply = std::function<void(ClientResponseMsg)>;

  CohortReplica(CohortId cohort, std::vector<NodeId> members, ReplicaEnv env, ReplicaOptions options = {});
  ~CohortReplica();
  CohortReplica(const CohortReplica&) = delete;
  CohortReplica& operator=(const CohortReplica&) = delete;

  // Rebuilds committed state from the node's log scan. Must run before start().
  RecoveryState recover_local(const Wal::ScanResult& scan);
  // Joins leader election.
  void start();

  void on_message(NodeId from, const Message& m);
  void on_peer_down(NodeId peer);
  void handle_client(const ClientRequestMsg& req, Reply reply);

  CohortId cohort() const { return cohort_; }
  Role role() const { return role_; }
  Lsn committed() const { return cmt_; }
  Lsn last() const;
  uint32_t epoch() const { return epoch_; }
  uint32_t log_epoch() const { return log_epoch_; }
  bool voter() const { return voter_; }
  // Leader: takeover finished and writes accepted. Follower: synced with
  // the current leader.
  bool serving() const;
  bool write_open() const { return role_ == Role::kLeader && write_open_; }
  size_t reproposed() const { return reproposed_; }
  size_t pending() const { return role_ == Role::kLeader ? queue_.size() : follower_queue_.size(); }
  std::optional<NodeId> leader() const { return leader_; }
  const CohortStore& store() const { return store_; }
  CohortStore& store() { return store_; }
  const Election* election() const { return election_.get(); }

 private:
  struct Pending {
    WriteOp op;
    bool durable = false;
    Reply reply;
  };
  struct Blocked {
    WriteOp op;
    Reply reply;
  };
  enum class SyncPhase { kNone, kRequested, kAwaitDone, kActive };

  // replication
  void leader_write(WriteOp op, Reply reply);
  void assign(WriteOp op, Reply reply);
  uint64_t projected_version(const std::string& key, const std::string& column) const;
  void try_commit();
  void commit_tick(uint64_t generation);
  void on_propose(NodeId from, const Message& m);
  void on_ack(NodeId from, const Message& m);
  void on_commit(NodeId from, const Message& m);
  void follower_commit(Lsn up_to);
  void apply_committed(const WriteOp& op, Lsn lsn);
  void note_commit_point();
  void maybe_checkpoint();
  void serve_read(const ClientRequestMsg& req, Reply reply);
  void drain_blocked();
  void step_down(const char* why);

  // election glue
  std::optional<Candidacy> candidacy() const;
  void on_won(uint32_t epoch);
  void on_follow(const std::string& leader_host);
  void on_leader_lost();

  // catch-up and takeover
  void request_sync();
  void arm_sync_retry();
  void on_sync_request(NodeId from, const Message& m);
  void on_sync_data(NodeId from, const Message& m);
  void on_sync_ack_data(NodeId from, const Message& m);
  void on_sync_done(NodeId from, const Message& m);
  void on_sync_ack(NodeId from, const Message& m);
  // Follower side: truncates what the leader never committed in the batch's
  // range, logs and applies the rest, then runs `then` once it is durable.
  void reconcile_committed(const SyncBatchMsg& b, std::function<void()> then);
  void fence(NodeId follower);
  void lift_fence(NodeId follower);
  void finish_takeover();
  void persist_log_epoch(uint32_t e);

  void send(NodeId to, MsgType type, MessageBody body);
  void broadcast(MsgType type, const MessageBody& body);
  void trace(std::string_view kind, nlohmann::json fields);
  template <typename F>
  auto guard(F fn) {
    return [alive = alive_, fn = std::move(fn)](auto&&... args) {
      if (*alive) fn(std::forward<decltype(args)>(args)...);
    };
  }

  CohortId cohort_;
  std::vector<NodeId> members_;
  ReplicaEnv env_;
  ReplicaOptions options_;
  CohortStore store_;
  std::shared_ptr<bool> alive_;
  std::unique_ptr<Election> election_;

  Role role_ = Role::kRecovering;
  bool voter_ = false;
  uint32_t log_epoch_ = 0;
  uint32_t epoch_ = 0;
  Lsn cmt_;
  std::optional<NodeId> leader_;

  // leader
  std::map<Lsn, Pending> queue_;
  std::map<CellKey, uint64_t> pending_versions_;
  std::map<NodeId, Lsn> acked_;
  std::set<NodeId> synced_;
  std::map<NodeId, uint64_t> fences_;
  std::map<NodeId, Lsn> sync_from_;
  std::deque<Blocked> blocked_;
  // Condition failures that observed a pending write; answered once it commits.
  std::multimap<Lsn, std::pair<Reply, ClientResponseMsg>> deferred_;
  uint64_t next_seq_ = 0;
  bool write_open_ = false;
  bool takeover_ = false;
  Lsn takeover_target_;
  size_t reproposed_ = 0;
  uint64_t generation_ = 0;
  uint64_t fence_counter_ = 0;

  // follower
  SyncPhase phase_ = SyncPhase::kNone;
  std::map<Lsn, WriteOp> follower_queue_;
  Lsn durable_;
  uint64_t sync_attempt_ = 0;
};

}  // namespace spinnaker
