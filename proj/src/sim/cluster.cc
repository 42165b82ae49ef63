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

#include "spinnaker/sim/cluster.h"

#include "spinnaker/recovery/recovery.h"

namespace spinnaker {

struct SimCluster::Incarnation {
  explicit Incarnation(Scheduler& base) : sched(base) {}
  ~Incarnation() {
    replicas.clear();
    wal.reset();
  }

  uint64_t number = 0;
  GuardedScheduler sched;
  SessionId session = 0;
  std::unique_ptr<Wal> wal;
  std::map<CohortId, std::unique_ptr<CohortReplica>> replicas;
};

SimCluster::SimCluster(Layout layout, SimOptions options)
    : layout_(std::move(layout)), options_(options), rng_(options.seed ^ 0x9e3779b97f4a7c15ull) {
  trace_ = std::make_unique<TraceRecorder>(queue_, options_.trace);
  coord_ = std::make_unique<Coordinator>(queue_, options_.coord, trace_.get());
  network_ = std::make_unique<SimNetwork>(queue_, options_.seed, options_.net, trace_.get());
  nodes_.resize(layout_.nodes().size());
  for (size_t i = 0; i < nodes_.size(); ++i) nodes_[i].host = layout_.nodes()[i];
}

SimCluster::~SimCluster() {
  for (auto& n : nodes_) n.inc.reset();
  clients_.clear();
}

void SimCluster::start() {
  for (NodeId id = 0; id < nodes_.size(); ++id) format(id, true);
  for (NodeId id = 0; id < nodes_.size(); ++id) boot(id);
}

void SimCluster::start_nodes(const std::vector<NodeId>& order) {
  for (NodeId id : order) boot(id);
}

void SimCluster::format(NodeId id, bool voter) {
  if (!voter) return;
  for (CohortId c : layout_.cohorts_of(id)) store_log_epoch(nodes_[id].disk, c, 0);
}

void SimCluster::boot(NodeId id) {
  Node& node = nodes_[id];
  if (node.inc) return;
  auto inc = std::make_unique<Incarnation>(queue_);
  inc->number = ++node.incarnations;
  inc->session = coord_->open_session(node.host);
  inc->wal = std::make_unique<Wal>(node.disk, inc->sched, options_.wal, trace_.get(), node.host);
  auto scan = inc->wal->open();
  for (CohortId c : layout_.cohorts_of(id)) {
    ReplicaEnv env;
    env.self = id;
    env.host = node.host;
    env.sched = &inc->sched;
    env.wal = inc->wal.get();
    env.disk = &node.disk;
    env.coord = coord_.get();
    env.session = inc->session;
    env.trace = trace_.get();
    env.send = [this, id](NodeId to, const Message& m) { network_->send(id, to, m); };
    env.resolve = [this](const std::string& host) { return resolve(host); };
    auto r = std::make_unique<CohortReplica>(c, layout_.range(c).cohort, std::move(env), options_.replica);
    r->recover_local(scan);
    inc->replicas.emplace(c, std::move(r));
  }
  trace_->record("node", "node_up", {{"node", node.host}, {"incarnation", inc->number}});
  uint64_t number = inc->number;
  node.inc = std::move(inc);
  network_->attach(
      id, [this, id](NodeId from, const Message& m) { on_message(id, from, m); },
      [this, id](NodeId peer) {
        if (!nodes_[id].inc) return;
        for (auto& [c, r] : nodes_[id].inc->replicas) r->on_peer_down(peer);
      });
  for (auto& [c, r] : node.inc->replicas) r->start();
  node.inc->sched.schedule(options_.heartbeat_interval, [this, id, number] { heartbeat(id, number); });
}

void SimCluster::heartbeat(NodeId id, uint64_t number) {
  Node& node = nodes_[id];
  if (!node.inc || node.inc->number != number) return;
  Status s = coord_->heartbeat(node.inc->session);
  if (s.code() == Code::kSessionExpired) {
    trace_->record("node", "session_expired", {{"node", node.host}});
    // Everything tied to the old session is gone; rejoin as after a crash.
    queue_.schedule(0, [this, id, number] {
      if (!nodes_[id].inc || nodes_[id].inc->number != number) return;
      crash(id);
      restart(id);
    });
    return;
  }
  node.inc->sched.schedule(options_.heartbeat_interval, [this, id, number] { heartbeat(id, number); });
}

void SimCluster::on_message(NodeId id, NodeId from, const Message& m) {
  Node& node = nodes_[id];
  if (!node.inc) return;
  auto it = node.inc->replicas.find(m.cohort);
  if (m.type == MsgType::kClientRequest) {
    const auto& req = m.as<ClientRequestMsg>();
    CohortId cohort = m.cohort;
    auto reply = [this, id, from, cohort](ClientResponseMsg resp) {
      Message out{MsgType::kClientResponse, cohort, 0, std::move(resp)};
      network_->send(id, from, out);
    };
    if (it == node.inc->replicas.end()) {
      ClientResponseMsg resp;
      resp.request_id = req.request_id;
      resp.code = Code::kNotLeader;
      reply(std::move(resp));
      return;
    }
    it->second->handle_client(req, reply);
    return;
  }
  if (it != node.inc->replicas.end()) it->second->on_message(from, m);
}

void SimCluster::crash(NodeId id) {
  Node& node = nodes_[id];
  if (!node.inc) return;
  size_t torn = 0;
  if (options_.torn_writes && node.inc->wal->force_in_flight()) {
    for (const auto& [seg, bytes] : node.inc->wal->in_flight_chunks()) {
      std::uniform_int_distribution<size_t> dist(0, bytes.size());
      size_t keep = dist(rng_);
      node.disk.append_segment(seg, std::span<const uint8_t>(bytes.data(), keep));
      torn += keep;
    }
  }
  network_->detach(id);
  node.inc.reset();
  trace_->record("node", "node_crash", {{"node", node.host}, {"torn_bytes", torn}});
}

void SimCluster::restart(NodeId id) { boot(id); }

void SimCluster::wipe(NodeId id) {
  crash(id);
  nodes_[id].disk.wipe();
  trace_->record("node", "node_wipe", {{"node", nodes_[id].host}});
}

void SimCluster::replace(NodeId id) {
  wipe(id);
  format(id, true);
  trace_->record("node", "node_replace", {{"node", nodes_[id].host}});
}

void SimCluster::pause(NodeId a, NodeId b) {
  network_->pause(a, b);
  trace_->record("net", "link_pause", {{"a", a}, {"b", b}});
}

void SimCluster::resume(NodeId a, NodeId b) {
  network_->resume(a, b);
  trace_->record("net", "link_resume", {{"a", a}, {"b", b}});
}

void SimCluster::isolate(NodeId id) {
  for (NodeId other = 0; other < nodes_.size(); ++other) {
    if (other != id) network_->pause(id, other);
  }
  trace_->record("net", "isolate", {{"node", nodes_[id].host}});
}

void SimCluster::heal(NodeId id) {
  for (NodeId other = 0; other < nodes_.size(); ++other) {
    if (other != id) network_->resume(id, other);
  }
  trace_->record("net", "heal", {{"node", nodes_[id].host}});
}

void SimCluster::set_coordination(bool available) {
  coord_->set_available(available);
  trace_->record("coord", available ? "coord_up" : "coord_down", nlohmann::json::object());
}

bool SimCluster::up(NodeId id) const { return nodes_.at(id).inc != nullptr; }

Wal* SimCluster::wal(NodeId id) {
  auto& inc = nodes_.at(id).inc;
  return inc ? inc->wal.get() : nullptr;
}

CohortReplica* SimCluster::replica(NodeId id, CohortId cohort) {
  auto& inc = nodes_.at(id).inc;
  if (!inc) return nullptr;
  auto it = inc->replicas.find(cohort);
  return it == inc->replicas.end() ? nullptr : it->second.get();
}

std::optional<NodeId> SimCluster::leader(CohortId cohort) {
  std::optional<NodeId> best;
  uint32_t best_epoch = 0;
  for (NodeId id : layout_.range(cohort).cohort) {
    auto* r = replica(id, cohort);
    if (r && r->write_open() && (!best || r->epoch() > best_epoch)) {
      best = id;
      best_epoch = r->epoch();
    }
  }
  return best;
}

std::optional<NodeId> SimCluster::resolve(const std::string& host) const {
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].host == host) return id;
  }
  return std::nullopt;
}

Client& SimCluster::add_client() {
  NodeId id = kClientIdBase + static_cast<NodeId>(clients_.size());
  ClientEnv env;
  env.self = id;
  env.sched = &queue_;
  env.coord = coord_.get();
  env.layout = &layout_;
  env.trace = trace_.get();
  env.send = [this, id](NodeId to, const Message& m) { network_->send(id, to, m); };
  env.resolve = [this](const std::string& host) { return resolve(host); };
  clients_.push_back(std::make_unique<Client>(std::move(env), options_.client));
  Client* c = clients_.back().get();
  network_->attach(id, [c](NodeId from, const Message& m) { c->on_message(from, m); });
  return *c;
}

}  // namespace spinnaker
