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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spinnaker/common/event_queue.h"
#include "spinnaker/common/status.h"
#include "spinnaker/common/trace_sink.h"

namespace spinnaker {

using SessionId = uint64_t;

enum class ZMode { kPersistent, kEphemeral };
enum class WatchKind { kData, kChildren };

struct WatchEvent {
  enum Type { kCreated, kDeleted, kDataChanged, kChildrenChanged };
  std::string path;
  Type type;
};

struct ZStat {
  int64_t version = 0;  // bumped by every set_data
  SessionId owner = 0;  // 0 for persistent nodes
  int64_t sequence = -1;
};

struct CoordinatorOptions {
  Tick session_timeout = 2000;
  // Delay between a change and the delivery of the watch it triggers.
  Tick watch_delay = 1;
};

// Single logical coordination service: a znode tree with persistent,
// ephemeral and sequential nodes, one-shot watches and heartbeat sessions.
// Every operation applies atomically at the caller's event.
class Coordinator {
 public:
  using Watcher = std::function<void(const WatchEvent&)>;

  Coordinator(Scheduler& sched, CoordinatorOptions options = {}, TraceSink* trace = nullptr);

  SessionId open_session(const std::string& owner);
  Status heartbeat(SessionId session);
  void close_session(SessionId session);
  bool session_alive(SessionId session) const;

  Result<std::string> create(SessionId session, const std::string& path, const std::string& data, ZMode mode,
                             bool sequential = false);
  // `expected_version` < 0 skips the version check.
  Status remove(SessionId session, const std::string& path, int64_t expected_version = -1);
  Result<std::string> get_data(SessionId session, const std::string& path, ZStat* stat = nullptr) const;
  Status set_data(SessionId session, const std::string& path, const std::string& data,
                  int64_t expected_version = -1);
  // Sorted by sequence number, then by name.
  Result<std::vector<std::string>> get_children(SessionId session, const std::string& path) const;
  bool exists(const std::string& path) const;

  // One-shot watch. A data watch may be set on a missing node and fires
  // when it is created. Delivered through the scheduler, and dropped if the
  // watcher's session is gone by then.
  Status watch(SessionId session, const std::string& path, WatchKind kind, Watcher fn);

  // While unavailable every call fails with kCoordinationUnavailable and
  // session expiry is frozen; sessions get a fresh timeout when it ends.
  void set_available(bool available);
  bool available() const { return available_; }

  // Creates every missing ancestor of `path` as persistent.
  void ensure_path(const std::string& path);

  uint64_t calls() const { return calls_; }
  uint64_t expirations() const { return expirations_; }

 private:
  struct Znode {
    std::string data;
    ZStat stat;
    std::set<std::string> children;
    int64_t next_sequence = 1;
  };
  struct Session {
    std::string owner;
    Tick last_heartbeat = 0;
    bool alive = true;
    std::set<std::string> ephemerals;
  };
  struct WatchEntry {
    SessionId session;
    Watcher fn;
  };

  Status check_session(SessionId session) const;
  void note_call(const char* op, const std::string& path, SessionId session) const;
  void schedule_expiry(SessionId session);
  void expire(SessionId session);
  void erase_node(const std::string& path);
  void fire(const std::string& path, WatchKind kind, WatchEvent::Type type);
  static std::string parent_of(const std::string& path);
  static std::string name_of(const std::string& path);

  Scheduler& sched_;
  CoordinatorOptions options_;
  TraceSink* trace_;
  std::map<std::string, Znode> nodes_;
  std::map<SessionId, Session> sessions_;
  std::map<std::pair<std::string, WatchKind>, std::vector<WatchEntry>> watches_;
  SessionId next_session_ = 1;
  bool available_ = true;
  mutable uint64_t calls_ = 0;
  uint64_t expirations_ = 0;
};

}  // namespace spinnaker
