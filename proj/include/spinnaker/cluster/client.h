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

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spinnaker/cluster/layout.h"
#include "spinnaker/coordination/coordinator.h"
#include "spinnaker/replication/messages.h"

namespace spinnaker {

struct ClientEnv {
  NodeId self = 0;
  Scheduler* sched = nullptr;
  Coordinator* coord = nullptr;
  const Layout* layout = nullptr;
  TraceSink* trace = nullptr;
  std::function<void(NodeId to, const Message& m)> send;
  std::function<std::optional<NodeId>(const std::string& host)> resolve;
};

struct ClientOptions {
  // A write attempt with no answer by then is reported as indeterminate.
  Tick attempt_timeout = 1500;
  Tick read_timeout = 300;
  // Overall budget before giving up with kRangeUnavailable.
  Tick deadline = 8000;
  Tick retry_backoff = 50;
};

struct ClientCall {
  ClientOp op = ClientOp::kGet;
  std::string key;
  std::vector<ColumnWrite> columns;
  bool consistent = true;
};

struct ClientResult {
  Code code = Code::kOk;
  std::string detail;
  std::vector<std::optional<std::string>> values;
  std::vector<uint64_t> versions;
  // The write may or may not have been applied.
  bool indeterminate = false;
  int attempts = 0;
  std::optional<NodeId> served_by;
};

// Routes calls by key range. Writes and strong reads go to the cached
// leader, refreshed from /r/<id>/leader after NotLeader or Unavailable;
// timeline reads rotate over the range's replicas.
class Client {
 public:
  using Done = std::function<void(ClientResult)>;

  Client(ClientEnv env, ClientOptions options = {});
  ~Client();

  void call(ClientCall call, Done done);
  void on_message(NodeId from, const Message& m);

  void get(const std::string& key, const std::string& column, bool consistent, Done done);
  void put(const std::string& key, const std::string& column, const std::string& value, Done done);
  void del(const std::string& key, const std::string& column, Done done);
  void conditional_put(const std::string& key, const std::string& column, const std::string& value,
                       uint64_t expected_version, Done done);
  void conditional_delete(const std::string& key, const std::string& column, uint64_t expected_version, Done done);

  NodeId id() const { return env_.self; }
  uint64_t coordination_lookups() const { return lookups_; }
  size_t outstanding() const { return ops_.size(); }
  std::optional<NodeId> leader_hint(CohortId range) const;

 private:
  struct Op {
    ClientCall call;
    Done done;
    CohortId range = 0;
    Tick started = 0;
    int attempts = 0;
    uint64_t attempt_id = 0;
    size_t replica_cursor = 0;
    size_t replicas_tried = 0;
    std::optional<NodeId> target;
  };

  bool is_write(const Op& op) const { return op.call.op != ClientOp::kGet; }
  void attempt(uint64_t op_id);
  void retry_later(uint64_t op_id);
  void finish(uint64_t op_id, ClientResult r);
  void on_timeout(uint64_t op_id, uint64_t attempt_id);
  std::optional<NodeId> lookup_leader(CohortId range);

  ClientEnv env_;
  ClientOptions options_;
  std::shared_ptr<bool> alive_;
  std::map<uint64_t, Op> ops_;
  std::map<uint64_t, uint64_t> attempts_;  // attempt id -> op id
  std::map<CohortId, NodeId> hints_;
  uint64_t next_op_ = 1;
  uint64_t next_attempt_ = 1;
  size_t rr_ = 0;
  SessionId session_ = 0;
  uint64_t lookups_ = 0;
};

}  // namespace spinnaker
