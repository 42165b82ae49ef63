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

#include "spinnaker/coordination/coordinator.h"

#include <algorithm>
#include <cstdio>

namespace spinnaker {

Coordinator::Coordinator(Scheduler& sched, CoordinatorOptions options, TraceSink* trace)
    : sched_(sched), options_(options), trace_(trace ? trace : &NullTrace::instance()) {
  nodes_["/"] = Znode{};
}

std::string Coordinator::parent_of(const std::string& path) {
  const auto slash = path.rfind('/');
  return slash == 0 ? "/" : path.substr(0, slash);
}

std::string Coordinator::name_of(const std::string& path) { return path.substr(path.rfind('/') + 1); }

void Coordinator::note_call(const char* op, const std::string& path, SessionId session) const {
  ++calls_;
  trace_->record("coord", "coord_call", {{"op", op}, {"path", path}, {"session", session}});
}

Status Coordinator::check_session(SessionId session) const {
  if (!available_) return make_error(Code::kCoordinationUnavailable, "coordination service unavailable");
  auto it = sessions_.find(session);
  if (it == sessions_.end() || !it->second.alive) {
    return make_error(Code::kSessionExpired, "session " + std::to_string(session));
  }
  return Status::ok();
}

SessionId Coordinator::open_session(const std::string& owner) {
  const SessionId id = next_session_++;
  sessions_[id] = Session{owner, sched_.now(), true, {}};
  trace_->record("coord", "session_open", {{"session", id}, {"owner", owner}});
  schedule_expiry(id);
  return id;
}

Status Coordinator::heartbeat(SessionId session) {
  if (auto s = check_session(session); !s) return s;
  sessions_[session].last_heartbeat = sched_.now();
  schedule_expiry(session);
  return Status::ok();
}

void Coordinator::schedule_expiry(SessionId session) {
  sched_.schedule(options_.session_timeout, [this, session] {
    auto it = sessions_.find(session);
    if (it == sessions_.end() || !it->second.alive || !available_) return;
    if (sched_.now() - it->second.last_heartbeat >= options_.session_timeout) expire(session);
  });
}

void Coordinator::close_session(SessionId session) {
  auto it = sessions_.find(session);
  if (it == sessions_.end() || !it->second.alive) return;
  expire(session);
}

bool Coordinator::session_alive(SessionId session) const {
  auto it = sessions_.find(session);
  return it != sessions_.end() && it->second.alive;
}

void Coordinator::expire(SessionId session) {
  Session& s = sessions_[session];
  s.alive = false;
  ++expirations_;
  trace_->record("coord", "session_expire", {{"session", session}, {"owner", s.owner}});
  const auto ephemerals = s.ephemerals;
  for (const auto& path : ephemerals) {
    if (nodes_.contains(path)) erase_node(path);
  }
  s.ephemerals.clear();
  for (auto& [_, entries] : watches_) {
    std::erase_if(entries, [&](const WatchEntry& w) { return w.session == session; });
  }
}

void Coordinator::set_available(bool available) {
  if (available_ == available) return;
  available_ = available;
  trace_->record("coord", "availability", {{"available", available}});
  if (available) {
    for (auto& [id, s] : sessions_) {
      if (!s.alive) continue;
      s.last_heartbeat = sched_.now();
      schedule_expiry(id);
    }
  }
}

void Coordinator::ensure_path(const std::string& path) {
  if (path.empty() || path == "/" || nodes_.contains(path)) return;
  ensure_path(parent_of(path));
  nodes_[path] = Znode{};
  nodes_[parent_of(path)].children.insert(name_of(path));
}

Result<std::string> Coordinator::create(SessionId session, const std::string& path, const std::string& data,
                                        ZMode mode, bool sequential) {
  note_call("create", path, session);
  if (auto s = check_session(session); !s) return s;
  const std::string parent = parent_of(path);
  auto p = nodes_.find(parent);
  if (p == nodes_.end()) return make_error(Code::kNoParent, path);
  if (p->second.stat.owner != 0) return make_error(Code::kNoParent, "ephemeral parent " + parent);
  std::string actual = path;
  int64_t seq = -1;
  if (sequential) {
    seq = p->second.next_sequence++;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%010lld", static_cast<long long>(seq));
    actual += buf;
  }
  if (nodes_.contains(actual)) return make_error(Code::kNodeExists, actual);
  Znode z;
  z.data = data;
  z.stat.sequence = seq;
  if (mode == ZMode::kEphemeral) {
    z.stat.owner = session;
    sessions_[session].ephemerals.insert(actual);
  }
  nodes_[actual] = std::move(z);
  nodes_[parent].children.insert(name_of(actual));
  fire(actual, WatchKind::kData, WatchEvent::kCreated);
  fire(parent, WatchKind::kChildren, WatchEvent::kChildrenChanged);
  return actual;
}

Status Coordinator::remove(SessionId session, const std::string& path, int64_t expected_version) {
  note_call("delete", path, session);
  if (auto s = check_session(session); !s) return s;
  auto it = nodes_.find(path);
  if (it == nodes_.end() || path == "/") return make_error(Code::kNoNode, path);
  if (expected_version >= 0 && it->second.stat.version != expected_version) {
    return make_error(Code::kBadVersion, path);
  }
  if (!it->second.children.empty()) return make_error(Code::kPrecondition, path + " has children");
  erase_node(path);
  return Status::ok();
}

void Coordinator::erase_node(const std::string& path) {
  auto it = nodes_.find(path);
  if (it->second.stat.owner != 0) {
    auto s = sessions_.find(it->second.stat.owner);
    if (s != sessions_.end()) s->second.ephemerals.erase(path);
  }
  nodes_.erase(it);
  const std::string parent = parent_of(path);
  nodes_[parent].children.erase(name_of(path));
  fire(path, WatchKind::kData, WatchEvent::kDeleted);
  fire(path, WatchKind::kChildren, WatchEvent::kDeleted);
  fire(parent, WatchKind::kChildren, WatchEvent::kChildrenChanged);
}

Result<std::string> Coordinator::get_data(SessionId session, const std::string& path, ZStat* stat) const {
  note_call("get", path, session);
  if (auto s = check_session(session); !s) return s;
  auto it = nodes_.find(path);
  if (it == nodes_.end()) return make_error(Code::kNoNode, path);
  if (stat) *stat = it->second.stat;
  return it->second.data;
}

Status Coordinator::set_data(SessionId session, const std::string& path, const std::string& data,
                             int64_t expected_version) {
  note_call("set", path, session);
  if (auto s = check_session(session); !s) return s;
  auto it = nodes_.find(path);
  if (it == nodes_.end()) return make_error(Code::kNoNode, path);
  if (expected_version >= 0 && it->second.stat.version != expected_version) {
    return make_error(Code::kBadVersion, path);
  }
  it->second.data = data;
  ++it->second.stat.version;
  fire(path, WatchKind::kData, WatchEvent::kDataChanged);
  return Status::ok();
}

Result<std::vector<std::string>> Coordinator::get_children(SessionId session, const std::string& path) const {
  note_call("children", path, session);
  if (auto s = check_session(session); !s) return s;
  auto it = nodes_.find(path);
  if (it == nodes_.end()) return make_error(Code::kNoNode, path);
  std::vector<std::pair<int64_t, std::string>> keyed;
  for (const auto& name : it->second.children) {
    const std::string child = path == "/" ? "/" + name : path + "/" + name;
    keyed.emplace_back(nodes_.at(child).stat.sequence, name);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> out;
  for (auto& [_, name] : keyed) out.push_back(std::move(name));
  return out;
}

bool Coordinator::exists(const std::string& path) const { return nodes_.contains(path); }

Status Coordinator::watch(SessionId session, const std::string& path, WatchKind kind, Watcher fn) {
  note_call(kind == WatchKind::kData ? "watch_data" : "watch_children", path, session);
  if (auto s = check_session(session); !s) return s;
  // A data watch on a missing node waits for its creation.
  if (kind == WatchKind::kChildren && !nodes_.contains(path)) return make_error(Code::kNoNode, path);
  watches_[{path, kind}].push_back(WatchEntry{session, std::move(fn)});
  return Status::ok();
}

void Coordinator::fire(const std::string& path, WatchKind kind, WatchEvent::Type type) {
  auto it = watches_.find({path, kind});
  if (it == watches_.end()) return;
  auto entries = std::move(it->second);
  watches_.erase(it);
  for (auto& w : entries) {
    WatchEvent ev{path, type};
    sched_.schedule(options_.watch_delay, [this, w = std::move(w), ev] {
      if (session_alive(w.session)) w.fn(ev);
    });
  }
}

}  // namespace spinnaker
