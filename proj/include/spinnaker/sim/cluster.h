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

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spinnaker/cluster/client.h"
#include "spinnaker/cluster/layout.h"
#include "spinnaker/coordination/coordinator.h"
#include "spinnaker/replication/replica.h"
#include "spinnaker/sim/network.h"
#include "spinnaker/sim/trace.h"
#include "spinnaker/wal/sim_disk.h"

namespace spinnaker {

inline constexpr NodeId kClientIdBase = 1000;

// Timer facade for one node incarnation. Callbacks scheduled through it
// never run once the incarnation is gone.
class GuardedScheduler final : public Scheduler {
 public:
  explicit GuardedScheduler(Scheduler& base) : base_(base), alive_(std::make_shared<bool>(true)) {}
  ~GuardedScheduler() override { *alive_ = false; }
  GuardedScheduler(const GuardedScheduler&) = delete;
  GuardedScheduler& operator=(const GuardedScheduler&) = delete;

  Tick now() const override { return base_.now(); }
  void schedule(Tick delay, std::function<void()> fn) override {
    base_.schedule(delay, [alive = alive_, fn = std::move(fn)] {
      if (*alive) fn();
    });
  }

 private:
  Scheduler& base_;
  std::shared_ptr<bool> alive_;
};

struct SimOptions {
  uint64_t seed = 1;
  NetworkOptions net;
  WalOptions wal;
  ReplicaOptions replica;
  CoordinatorOptions coord;
  ClientOptions client;
  Tick heartbeat_interval = 500;
  // A crash during a force leaves a random prefix of the in-flight bytes.
  bool torn_writes = false;
  bool trace = true;
};

// A whole simulated deployment on one event queue: nodes with durable
// disks, the coordination service, the network and any number of clients.
class SimCluster {
 public:
  explicit SimCluster(Layout layout, SimOptions options = {});
  ~SimCluster();
  SimCluster(const SimCluster&) = delete;
  SimCluster& operator=(const SimCluster&) = delete;

  // Formats every disk as a voting replica of its cohorts and boots all nodes.
  void start();
  // Boots the given nodes in order on disks prepared by the caller.
  void start_nodes(const std::vector<NodeId>& order);

  EventQueue& queue() { return queue_; }
  Tick now() const { return queue_.now(); }
  void run_until(Tick t) { queue_.run_until(t); }
  void run_for(Tick d) { queue_.run_until(queue_.now() + d); }

  Coordinator& coord() { return *coord_; }
  SimNetwork& network() { return *network_; }
  TraceRecorder& trace() { return *trace_; }
  const Layout& layout() const { return layout_; }
  const SimOptions& options() const { return options_; }
  size_t node_count() const { return nodes_.size(); }

  // Faults.
  void crash(NodeId id);
  void restart(NodeId id);
  // Destroys the disk. The node comes back as a non-voter that must be
  // caught up before it counts toward a quorum.
  void wipe(NodeId id);
  // Destroys the disk and brings the node back as a blank voter.
  void replace(NodeId id);
  void pause(NodeId a, NodeId b);
  void resume(NodeId a, NodeId b);
  void isolate(NodeId id);
  void heal(NodeId id);
  void set_coordination(bool available);

  bool up(NodeId id) const;
  uint64_t incarnation(NodeId id) const { return nodes_.at(id).incarnations; }
  SimDisk& disk(NodeId id) { return nodes_.at(id).disk; }
  Wal* wal(NodeId id);
  CohortReplica* replica(NodeId id, CohortId cohort);
  // The leader of `cohort` that accepts writes, if any.
  std::optional<NodeId> leader(CohortId cohort);
  std::optional<NodeId> resolve(const std::string& host) const;

  Client& add_client();
  Client& client(size_t i) { return *clients_.at(i); }
  size_t client_count() const { return clients_.size(); }

 private:
  struct Incarnation;
  struct Node {
    std::string host;
    SimDisk disk;
    std::unique_ptr<Incarnation> inc;
    uint64_t incarnations = 0;
  };

  void format(NodeId id, bool voter);
  void boot(NodeId id);
  void heartbeat(NodeId id, uint64_t incarnation);
  void on_message(NodeId id, NodeId from, const Message& m);

  Layout layout_;
  SimOptions options_;
  EventQueue queue_;
  std::mt19937_64 rng_;
  std::unique_ptr<TraceRecorder> trace_;
  std::unique_ptr<Coordinator> coord_;
  std::unique_ptr<SimNetwork> network_;
  std::vector<Node> nodes_;
  std::vector<std::unique_ptr<Client>> clients_;
};

}  // namespace spinnaker
