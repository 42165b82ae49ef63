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

#include "spinnaker/sim/network.h"

namespace spinnaker {

namespace {

nlohmann::json describe(NodeId from, NodeId to, const Message& m, size_t bytes) {
  nlohmann::json j = {{"from", from}, {"to", to}, {"type", msg_type_name(m.type)}, {"cohort", m.cohort},
                      {"epoch", m.epoch}, {"bytes", bytes}};
  if (const auto* p = std::get_if<ProposeMsg>(&m.body)) j["lsn"] = p->record.lsn.to_string();
  if (const auto* a = std::get_if<AckMsg>(&m.body)) j["lsn"] = a->lsn.to_string();
  if (const auto* c = std::get_if<CommitMsg>(&m.body)) j["lsn"] = c->up_to.to_string();
  return j;
}

}  // namespace

SimNetwork::SimNetwork(EventQueue& queue, uint64_t seed, NetworkOptions options, TraceSink* trace)
    : queue_(queue), rng_(seed), options_(options), trace_(trace ? trace : &NullTrace::instance()) {}

uint64_t SimNetwork::generation(NodeId id) const {
  auto it = endpoints_.find(id);
  return it == endpoints_.end() ? 0 : it->second.generation;
}

void SimNetwork::attach(NodeId id, Receiver rx, DownListener down) {
  uint64_t gen = ++generations_[id];
  endpoints_[id] = Endpoint{gen, std::move(rx), std::move(down)};
}

void SimNetwork::detach(NodeId id) {
  if (endpoints_.erase(id) == 0) return;
  for (const auto& [peer, ep] : endpoints_) {
    if (!ep.down) continue;
    queue_.schedule(options_.down_notice_delay, [this, peer = peer, gen = ep.generation, id] {
      auto it = endpoints_.find(peer);
      if (it != endpoints_.end() && it->second.generation == gen && it->second.down) it->second.down(id);
    });
  }
}

void SimNetwork::send(NodeId from, NodeId to, const Message& m) {
  InFlight msg{from, to, generation(from), generation(to), queue_.now(), encode_message(m)};
  ++sent_;
  trace_->record("net", "msg_send", describe(from, to, m, msg.bytes.size()));
  if (msg.from_gen == 0 || msg.to_gen == 0) {
    ++dropped_;
    return;
  }
  if (paused(from, to)) {
    held_[{from, to}].push_back(std::move(msg));
    return;
  }
  dispatch(std::move(msg));
}

void SimNetwork::dispatch(InFlight msg) {
  std::uniform_int_distribution<Tick> dist(options_.min_delay, options_.max_delay);
  Tick delay = dist(rng_);
  if (options_.bytes_per_tick > 0) {
    delay += static_cast<Tick>((msg.bytes.size() + options_.bytes_per_tick - 1) / options_.bytes_per_tick);
  }
  Tick& last = last_arrival_[{msg.from, msg.to}];
  Tick arrival = std::max(queue_.now() + delay, last);
  last = arrival;
  queue_.at(arrival, [this, m = std::move(msg)]() mutable { deliver(std::move(m)); });
}

void SimNetwork::deliver(InFlight msg) {
  if (generation(msg.from) != msg.from_gen || generation(msg.to) != msg.to_gen) {
    ++dropped_;
    return;
  }
  if (paused(msg.from, msg.to)) {
    held_[{msg.from, msg.to}].push_back(std::move(msg));
    return;
  }
  auto decoded = decode_message(msg.bytes);
  if (!decoded.is_ok()) {
    ++dropped_;
    trace_->record("net", "msg_corrupt", {{"from", msg.from}, {"to", msg.to}});
    return;
  }
  ++delivered_;
  max_delay_seen_ = std::max(max_delay_seen_, queue_.now() - msg.sent_at);
  auto j = describe(msg.from, msg.to, *decoded, msg.bytes.size());
  j["sent"] = msg.sent_at;
  trace_->record("net", "msg_recv", std::move(j));
  auto rx = endpoints_.at(msg.to).rx;
  if (rx) rx(msg.from, *decoded);
}

void SimNetwork::pause(NodeId a, NodeId b) { paused_.insert(link(a, b)); }

void SimNetwork::resume(NodeId a, NodeId b) {
  paused_.erase(link(a, b));
  for (auto key : {std::pair{a, b}, std::pair{b, a}}) {
    auto it = held_.find(key);
    if (it == held_.end()) continue;
    auto held = std::move(it->second);
    held_.erase(it);
    for (auto& msg : held) dispatch(std::move(msg));
  }
}

bool SimNetwork::paused(NodeId a, NodeId b) const { return paused_.contains(link(a, b)); }

}  // namespace spinnaker
