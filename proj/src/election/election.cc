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

#include "spinnaker/election/election.h"

#include <algorithm>
#include <map>
#include <sstream>

namespace spinnaker {

std::string cohort_path(CohortId cohort) { return "/r/" + std::to_string(cohort); }

std::string Candidacy::encode() const {
  return host + "|" + std::to_string(log_epoch) + "|" + last.to_string() + "|" + std::to_string(round);
}

std::optional<Candidacy> Candidacy::decode(const std::string& data) {
  std::vector<std::string> parts;
  std::stringstream ss(data);
  std::string part;
  while (std::getline(ss, part, '|')) parts.push_back(part);
  if (parts.size() != 4) return std::nullopt;
  Candidacy c;
  c.host = parts[0];
  auto lsn = Lsn::parse(parts[2]);
  if (!lsn) return std::nullopt;
  c.last = *lsn;
  try {
    c.log_epoch = static_cast<uint32_t>(std::stoul(parts[1]));
    c.round = std::stoull(parts[3]);
  } catch (...) {
    return std::nullopt;
  }
  return c;
}

size_t pick_winner(const std::vector<Candidacy>& candidates) {
  size_t best = 0;
  for (size_t i = 1; i < candidates.size(); ++i) {
    const auto& a = candidates[i];
    const auto& b = candidates[best];
    const auto ka = std::make_pair(a.log_epoch, a.last);
    const auto kb = std::make_pair(b.log_epoch, b.last);
    if (ka > kb || (ka == kb && a.sequence < b.sequence)) best = i;
  }
  return best;
}

Result<uint32_t> allocate_epoch(Coordinator& coord, SessionId session, CohortId cohort) {
  const std::string path = cohort_path(cohort) + "/epoch";
  for (;;) {
    ZStat st;
    auto data = coord.get_data(session, path, &st);
    if (!data) {
      if (data.code() != Code::kNoNode) return data.status();
      auto made = coord.create(session, path, "0", ZMode::kPersistent);
      if (!made && made.code() != Code::kNodeExists) return made.status();
      continue;
    }
    const uint32_t next = static_cast<uint32_t>(std::stoul(data->empty() ? "0" : *data)) + 1;
    auto s = coord.set_data(session, path, std::to_string(next), st.version);
    if (s) return next;
    if (s.code() != Code::kBadVersion) return s;
  }
}

Election::Election(CohortId cohort, std::string host, Coordinator& coord, SessionId session, Scheduler& sched,
                   TraceSink* trace, Hooks hooks, Tick retry_delay)
    : cohort_(cohort), host_(std::move(host)), coord_(coord), session_(session), sched_(sched),
      trace_(trace ? trace : &NullTrace::instance()), hooks_(std::move(hooks)), retry_delay_(retry_delay),
      alive_(std::make_shared<bool>(true)) {}

Election::~Election() { *alive_ = false; }

void Election::start() {
  if (running_) return;
  running_ = true;
  ++rounds_;
  trace_->record("election", "election_start", {{"cohort", cohort_}, {"host", host_}});
  schedule_attempt(0);
}

void Election::schedule_attempt(Tick delay) {
  if (attempt_scheduled_) return;
  attempt_scheduled_ = true;
  sched_.schedule(delay, [this, alive = alive_] {
    if (!*alive) return;
    attempt_scheduled_ = false;
    attempt();
  });
}

void Election::retry_later() {
  attempt_scheduled_ = false;
  schedule_attempt(retry_delay_);
}

void Election::watch_leader() {
  if (leader_watch_armed_) return;
  auto s = coord_.watch(session_, cohort_path(cohort_) + "/leader", WatchKind::kData,
                        [this, alive = alive_](const WatchEvent& ev) {
                          if (*alive) on_leader_event(ev);
                        });
  leader_watch_armed_ = s.is_ok();
}

void Election::on_leader_event(const WatchEvent& ev) {
  leader_watch_armed_ = false;
  if (ev.type == WatchEvent::kDeleted) {
    trace_->record("election", "leader_gone", {{"cohort", cohort_}, {"host", host_}});
    if (!running_) {
      if (hooks_.leader_lost) hooks_.leader_lost();
      start();
    } else {
      schedule_attempt(0);
    }
    return;
  }
  if (running_) {
    schedule_attempt(0);
  } else {
    watch_leader();
  }
}

void Election::attempt() {
  if (!running_) return;
  const std::string base = cohort_path(cohort_);
  ZStat st;
  auto leader = coord_.get_data(session_, base + "/leader", &st);
  if (!leader && leader.code() != Code::kNoNode) {
    if (leader.code() == Code::kCoordinationUnavailable) retry_later();
    return;
  }
  watch_leader();
  if (leader) {
    if (*leader == host_) {
      // Our own previous incarnation still holds the znode; wait for its
      // session to expire.
      trace_->record("election", "ghost_leader", {{"cohort", cohort_}, {"host", host_}});
      if (st.owner == session_) running_ = false;
      return;
    }
    running_ = false;
    if (!my_candidacy_.empty()) {
      coord_.remove(session_, my_candidacy_);
      my_candidacy_.clear();
    }
    trace_->record("election", "follow", {{"cohort", cohort_}, {"host", host_}, {"leader", *leader}});
    hooks_.follow(*leader);
    return;
  }

  auto mine = hooks_.candidacy ? hooks_.candidacy() : std::nullopt;
  if (!mine) return;  // not a voter; wait for a leader to appear

  auto epoch = coord_.get_data(session_, base + "/epoch");
  if (!epoch && epoch.code() == Code::kCoordinationUnavailable) return retry_later();
  mine->round = epoch ? std::stoull(epoch->empty() ? "0" : *epoch) : 0;
  mine->host = host_;

  const std::string dir = base + "/candidates";
  if (!coord_.exists(dir)) coord_.ensure_path(dir);
  auto children = coord_.get_children(session_, dir);
  if (!children) return retry_later();
  const std::string data = mine->encode();
  bool have_current = false;
  for (const auto& name : *children) {
    const std::string path = dir + "/" + name;
    ZStat cst;
    auto cdata = coord_.get_data(session_, path, &cst);
    if (!cdata) continue;
    auto c = Candidacy::decode(*cdata);
    const bool stale_round = !c || c->round < mine->round;
    const bool ours = c && c->host == host_;
    if (ours && path == my_candidacy_ && *cdata == data) {
      have_current = true;
      continue;
    }
    if (stale_round || ours) coord_.remove(session_, path, cst.version);
  }
  if (!have_current) {
    auto made = coord_.create(session_, dir + "/c-", data, ZMode::kEphemeral, true);
    if (!made) return retry_later();
    my_candidacy_ = *made;
    trace_->record("election", "candidacy",
                   {{"cohort", cohort_}, {"host", host_}, {"path", my_candidacy_}, {"lst", mine->last.to_string()},
                    {"log_epoch", mine->log_epoch}});
  }
  if (!children_watch_armed_) {
    auto s = coord_.watch(session_, dir, WatchKind::kChildren, [this, alive = alive_](const WatchEvent&) {
      if (!*alive) return;
      children_watch_armed_ = false;
      if (running_) schedule_attempt(0);
    });
    children_watch_armed_ = s.is_ok();
  }
  evaluate();
}

void Election::evaluate() {
  const std::string base = cohort_path(cohort_);
  const std::string dir = base + "/candidates";
  auto mine_data = coord_.get_data(session_, my_candidacy_);
  if (!mine_data) return retry_later();
  auto mine = Candidacy::decode(*mine_data);
  auto children = coord_.get_children(session_, dir);
  if (!children || !mine) return retry_later();
  // Newest candidacy per host in the current round.
  std::map<std::string, Candidacy> latest;
  for (const auto& name : *children) {
    ZStat cst;
    auto cdata = coord_.get_data(session_, dir + "/" + name, &cst);
    if (!cdata) continue;
    auto c = Candidacy::decode(*cdata);
    if (!c || c->round != mine->round) continue;
    c->sequence = cst.sequence;
    auto& slot = latest[c->host];
    if (slot.sequence < c->sequence) slot = *c;
  }
  if (latest.size() < 2) return;  // no majority yet
  std::vector<Candidacy> pool;
  for (auto& [_, c] : latest) pool.push_back(c);
  std::sort(pool.begin(), pool.end(), [](const Candidacy& a, const Candidacy& b) { return a.sequence < b.sequence; });
  const Candidacy& winner = pool[pick_winner(pool)];
  if (winner.host != host_) return;  // wait for the winner's leader znode

  auto made = coord_.create(session_, base + "/leader", host_, ZMode::kEphemeral);
  if (!made) {
    if (made.code() == Code::kNodeExists) {
      trace_->record("election", "superseded", {{"cohort", cohort_}, {"host", host_}});
      schedule_attempt(0);
    } else {
      retry_later();
    }
    return;
  }
  auto epoch = allocate_epoch(coord_, session_, cohort_);
  if (!epoch) {
    coord_.remove(session_, base + "/leader");
    return retry_later();
  }
  for (const auto& c : *children) coord_.remove(session_, dir + "/" + c);
  my_candidacy_.clear();
  running_ = false;
  trace_->record("election", "elected", {{"cohort", cohort_}, {"host", host_}, {"epoch", *epoch}});
  hooks_.won(*epoch);
}

}  // namespace spinnaker
