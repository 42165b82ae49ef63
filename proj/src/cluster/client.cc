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

#include "spinnaker/cluster/client.h"

#include "spinnaker/election/election.h"

namespace spinnaker {

Client::Client(ClientEnv env, ClientOptions options)
    : env_(std::move(env)), options_(options), alive_(std::make_shared<bool>(true)) {
  if (!env_.trace) env_.trace = &NullTrace::instance();
}

Client::~Client() { *alive_ = false; }

std::optional<NodeId> Client::leader_hint(CohortId range) const {
  auto it = hints_.find(range);
  if (it == hints_.end()) return std::nullopt;
  return it->second;
}

void Client::call(ClientCall call, Done done) {
  const uint64_t id = next_op_++;
  Op op;
  op.range = env_.layout->route(call.key).id;
  op.call = std::move(call);
  op.done = std::move(done);
  op.started = env_.sched->now();
  op.replica_cursor = rr_++;
  ops_.emplace(id, std::move(op));
  attempt(id);
}

std::optional<NodeId> Client::lookup_leader(CohortId range) {
  ++lookups_;
  if (!env_.coord->session_alive(session_) || !env_.coord->heartbeat(session_)) {
    session_ = env_.coord->open_session("client-" + std::to_string(env_.self));
  }
  auto host = env_.coord->get_data(session_, cohort_path(range) + "/leader");
  if (!host) return std::nullopt;
  auto node = env_.resolve(*host);
  if (node) hints_[range] = *node;
  return node;
}

void Client::attempt(uint64_t op_id) {
  auto it = ops_.find(op_id);
  if (it == ops_.end()) return;
  Op& op = it->second;
  if (env_.sched->now() - op.started > options_.deadline) {
    ClientResult r;
    r.code = Code::kRangeUnavailable;
    r.attempts = op.attempts;
    return finish(op_id, std::move(r));
  }
  std::optional<NodeId> target;
  Tick timeout = options_.attempt_timeout;
  if (op.call.op == ClientOp::kGet && !op.call.consistent) {
    const auto& cohort = env_.layout->range(op.range).cohort;
    target = cohort[op.replica_cursor % cohort.size()];
    timeout = options_.read_timeout;
  } else {
    auto hint = hints_.find(op.range);
    target = hint != hints_.end() ? std::optional<NodeId>(hint->second) : lookup_leader(op.range);
    if (op.call.op == ClientOp::kGet) timeout = options_.read_timeout;
  }
  if (!target) return retry_later(op_id);
  op.target = target;
  ++op.attempts;
  const uint64_t attempt_id = next_attempt_++;
  op.attempt_id = attempt_id;
  attempts_[attempt_id] = op_id;
  ClientRequestMsg req;
  req.request_id = attempt_id;
  req.op = op.call.op;
  req.consistent = op.call.consistent;
  req.key = op.call.key;
  req.columns = op.call.columns;
  env_.send(*target, Message{MsgType::kClientRequest, op.range, 0, std::move(req)});
  env_.sched->schedule(timeout, [this, alive = alive_, op_id, attempt_id] {
    if (*alive) on_timeout(op_id, attempt_id);
  });
}

void Client::retry_later(uint64_t op_id) {
  env_.sched->schedule(options_.retry_backoff, [this, alive = alive_, op_id] {
    if (*alive) attempt(op_id);
  });
}

void Client::on_timeout(uint64_t op_id, uint64_t attempt_id) {
  auto it = ops_.find(op_id);
  if (it == ops_.end() || it->second.attempt_id != attempt_id) return;
  attempts_.erase(attempt_id);
  Op& op = it->second;
  if (is_write(op)) {
    ClientResult r;
    r.code = Code::kUnavailable;
    r.detail = "timed out";
    r.indeterminate = true;
    r.attempts = op.attempts;
    return finish(op_id, std::move(r));
  }
  if (op.call.consistent) {
    hints_.erase(op.range);
  } else {
    ++op.replica_cursor;
  }
  attempt(op_id);
}

void Client::on_message(NodeId from, const Message& m) {
  if (m.type != MsgType::kClientResponse) return;
  const auto& resp = m.as<ClientResponseMsg>();
  auto a = attempts_.find(resp.request_id);
  if (a == attempts_.end()) return;
  const uint64_t op_id = a->second;
  attempts_.erase(a);
  auto it = ops_.find(op_id);
  if (it == ops_.end() || it->second.attempt_id != resp.request_id) return;
  Op& op = it->second;
  if (resp.code == Code::kNotLeader || resp.code == Code::kUnavailable) {
    if (op.call.op == ClientOp::kGet && !op.call.consistent) {
      ++op.replica_cursor;
      if (++op.replicas_tried % env_.layout->range(op.range).cohort.size() != 0) return attempt(op_id);
    } else {
      hints_.erase(op.range);
    }
    return retry_later(op_id);
  }
  ClientResult r;
  r.code = resp.code;
  r.detail = resp.detail;
  r.values = resp.values;
  r.versions = resp.versions;
  r.attempts = op.attempts;
  r.served_by = from;
  finish(op_id, std::move(r));
}

void Client::finish(uint64_t op_id, ClientResult r) {
  auto it = ops_.find(op_id);
  if (it == ops_.end()) return;
  Done done = std::move(it->second.done);
  ops_.erase(it);
  if (done) done(std::move(r));
}

void Client::get(const std::string& key, const std::string& column, bool consistent, Done done) {
  call(ClientCall{ClientOp::kGet, key, {ColumnWrite{column, std::nullopt, 0, 0}}, consistent}, std::move(done));
}

void Client::put(const std::string& key, const std::string& column, const std::string& value, Done done) {
  call(ClientCall{ClientOp::kPut, key, {ColumnWrite{column, value, 0, 0}}, true}, std::move(done));
}

void Client::del(const std::string& key, const std::string& column, Done done) {
  call(ClientCall{ClientOp::kDelete, key, {ColumnWrite{column, std::nullopt, 0, 0}}, true}, std::move(done));
}

void Client::conditional_put(const std::string& key, const std::string& column, const std::string& value,
                             uint64_t expected_version, Done done) {
  call(ClientCall{ClientOp::kConditionalPut, key, {ColumnWrite{column, value, expected_version, 0}}, true},
       std::move(done));
}

void Client::conditional_delete(const std::string& key, const std::string& column, uint64_t expected_version,
                                Done done) {
  call(ClientCall{ClientOp::kConditionalDelete, key, {ColumnWrite{column, std::nullopt, expected_version, 0}}, true},
       std::move(done));
}

}  // namespace spinnaker
