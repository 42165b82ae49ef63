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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spinnaker/common/lsn.h"
#include "spinnaker/common/write_op.h"
#include "spinnaker/coordination/coordinator.h"

namespace spinnaker {

// One posted candidacy. `log_epoch` is the epoch of the newest leader whose
// history the candidate's log has been reconciled with; it ranks ahead of
// the last LSN.
struct Candidacy {
  std::string host;
  uint32_t log_epoch = 0;
  Lsn last;
  uint64_t round = 0;
  int64_t sequence = -1;

  std::string encode() const;
  static std::optional<Candidacy> decode(const std::string& data);
};

// Index of the winner among candidacies of one round: greatest
// (log_epoch, last), ties going to the lowest sequence number.
size_t pick_winner(const std::vector<Candidacy>& candidates);

// Reads the stored epoch, stores epoch + 1 with a compare-and-set and
// returns it.
Result<uint32_t> allocate_epoch(Coordinator& coord, SessionId session, CohortId cohort);

std::string cohort_path(CohortId cohort);

// Leader election for one cohort on one node, driven by coordination
// watches. Outcomes are reported through callbacks; the election keeps
// watching the leader znode afterwards and restarts when it disappears.
class Election {
 public:
  struct Hooks {
    // Current candidacy values; nullopt when the node may not vote.
    std::function<std::optional<Candidacy>()> candidacy;
    std::function<void(uint32_t epoch)> won;
    std::function<void(const std::string& leader_host)> follow;
    // The leader znode vanished; the replica should stop serving as follower.
    std::function<void()> leader_lost;
  };

  Election(CohortId cohort, std::string host, Coordinator& coord, SessionId session, Scheduler& sched,
           TraceSink* trace, Hooks hooks, Tick retry_delay = 100);
  ~Election();
  Election(const Election&) = delete;
  Election& operator=(const Election&) = delete;

  // Begins a round unless one is already running.
  void start();
  bool running() const { return running_; }
  uint64_t rounds() const { return rounds_; }

 private:
  void schedule_attempt(Tick delay);
  void attempt();
  void evaluate();
  void watch_leader();
  void on_leader_event(const WatchEvent& ev);
  void retry_later();

  CohortId cohort_;
  std::string host_;
  Coordinator& coord_;
  SessionId session_;
  Scheduler& sched_;
  TraceSink* trace_;
  Hooks hooks_;
  Tick retry_delay_;
  std::shared_ptr<bool> alive_;

  bool running_ = false;
  bool attempt_scheduled_ = false;
  bool leader_watch_armed_ = false;
  bool children_watch_armed_ = false;
  uint64_t round_ = 0;
  uint64_t rounds_ = 0;
  std::string my_candidacy_;
};

}  // namespace spinnaker
