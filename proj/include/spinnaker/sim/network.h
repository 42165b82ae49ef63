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
#include <random>
#include <set>

#include "spinnaker/common/event_queue.h"
#include "spinnaker/common/trace_sink.h"
#include "spinnaker/replication/messages.h"

namespace spinnaker {

struct NetworkOptions {
  Tick min_delay = 1;
  Tick max_delay = 5;
  // Link bandwidth; zero makes delay independent of size.
  uint64_t bytes_per_tick = 0;
  // How long a peer takes to notice a torn connection.
  Tick down_notice_delay = 1;
};

// Reliable in-order transport between simulated endpoints. Every ordered
// pair behaves like one TCP connection: messages arrive once and in send
// order. Detaching an endpoint (a crash) drops everything in flight to or
// from it, and its peers are told the connection broke.
class SimNetwork {
 public:
  using Receiver = std::function<void(NodeId from, const Message& m)>;
  using DownListener = std::function<void(NodeId peer)>;

  SimNetwork(EventQueue& queue, uint64_t seed, NetworkOptions options = {}, TraceSink* trace = nullptr);

  void attach(NodeId id, Receiver rx, DownListener down = {});
  void detach(NodeId id);
  bool attached(NodeId id) const { return endpoints_.contains(id); }

  void send(NodeId from, NodeId to, const Message& m);

  // Messages between a and b (both directions) are held until resume.
  void pause(NodeId a, NodeId b);
  void resume(NodeId a, NodeId b);
  bool paused(NodeId a, NodeId b) const;

  uint64_t sent() const { return sent_; }
  uint64_t delivered() const { return delivered_; }
  uint64_t dropped() const { return dropped_; }
  Tick max_delay_seen() const { return max_delay_seen_; }

 private:
  struct Endpoint {
    uint64_t generation = 0;
    Receiver rx;
    DownListener down;
  };
  struct InFlight {
    NodeId from;
    NodeId to;
    uint64_t from_gen;
    uint64_t to_gen;
    Tick sent_at;
    Bytes bytes;
  };

  void dispatch(InFlight msg);
  void deliver(InFlight msg);
  uint64_t generation(NodeId id) const;
  static std::pair<NodeId, NodeId> link(NodeId a, NodeId b) { return {std::min(a, b), std::max(a, b)}; }

  EventQueue& queue_;
  std::mt19937_64 rng_;
  NetworkOptions options_;
  TraceSink* trace_;
  std::map<NodeId, Endpoint> endpoints_;
  std::map<NodeId, uint64_t> generations_;
  std::map<std::pair<NodeId, NodeId>, Tick> last_arrival_;
  std::set<std::pair<NodeId, NodeId>> paused_;
  std::map<std::pair<NodeId, NodeId>, std::deque<InFlight>> held_;
  uint64_t sent_ = 0;
  uint64_t delivered_ = 0;
  uint64_t dropped_ = 0;
  Tick max_delay_seen_ = 0;
};

}  // namespace spinnaker
