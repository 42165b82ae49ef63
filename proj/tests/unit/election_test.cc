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

#include <gtest/gtest.h>

#include <memory>

#include "spinnaker/election/election.h"

namespace spinnaker {
namespace {

Candidacy cand(std::string host, Lsn last, int64_t seq, uint32_t log_epoch = 1) {
  Candidacy c;
  c.host = std::move(host);
  c.last = last;
  c.sequence = seq;
  c.log_epoch = log_epoch;
  return c;
}

TEST(PickWinner, TieGoesToLowestSequence) {
  std::vector<Candidacy> pool{cand("A", Lsn(1, 21), 1), cand("B", Lsn(1, 21), 2)};
  EXPECT_EQ(pool[pick_winner(pool)].host, "A");
  std::swap(pool[0], pool[1]);
  EXPECT_EQ(pool[pick_winner(pool)].host, "A");
}

TEST(PickWinner, GreatestLastWins) {
  std::vector<Candidacy> pool{cand("C", Lsn(1, 21), 1), cand("B", Lsn(1, 22), 2)};
  EXPECT_EQ(pool[pick_winner(pool)].host, "B");
}

TEST(PickWinner, LogEpochRanksAheadOfLast) {
  std::vector<Candidacy> pool{cand("A", Lsn(1, 30), 1, 1), cand("B", Lsn(2, 25), 2, 2)};
  EXPECT_EQ(pool[pick_winner(pool)].host, "B");
}

TEST(CandidacyCodec, RoundTrip) {
  Candidacy c = cand("node-b", Lsn(3, 17), -1, 2);
  c.round = 4;
  auto d = Candidacy::decode(c.encode());
  ASSERT_TRUE(d);
  EXPECT_EQ(d->host, "node-b");
  EXPECT_EQ(d->last, Lsn(3, 17));
  EXPECT_EQ(d->log_epoch, 2u);
  EXPECT_EQ(d->round, 4u);
  EXPECT_FALSE(Candidacy::decode("garbage"));
}

TEST(AllocateEpoch, StrictlyIncreasing) {
  EventQueue q;
  Coordinator zk(q);
  zk.ensure_path("/r/7");
  SessionId s = zk.open_session("A");
  EXPECT_EQ(*allocate_epoch(zk, s, 7), 1u);
  EXPECT_EQ(*allocate_epoch(zk, s, 7), 2u);
  EXPECT_EQ(*zk.get_data(s, "/r/7/epoch"), "2");
}

TEST(AllocateEpoch, CoordinationOutage) {
  EventQueue q;
  Coordinator zk(q);
  zk.ensure_path("/r/7");
  SessionId s = zk.open_session("A");
  zk.set_available(false);
  EXPECT_EQ(allocate_epoch(zk, s, 7).code(), Code::kCoordinationUnavailable);
}

// Three contenders on one coordinator; each keeps its session alive.
struct ElectionFixture : ::testing::Test {
  struct Contender {
    std::string host;
    SessionId session = 0;
    Lsn last;
    bool voter = true;
    std::optional<uint32_t> won;
    std::optional<std::string> following;
    int lost = 0;
    std::unique_ptr<Election> election;
  };

  EventQueue q;
  Coordinator zk{q};
  std::vector<std::unique_ptr<Contender>> nodes;

  void SetUp() override { zk.ensure_path("/r/1"); }

  Contender& add(std::string host, Lsn last) {
    auto c = std::make_unique<Contender>();
    c->host = host;
    c->last = last;
    c->session = zk.open_session(host);
    Contender* raw = c.get();
    Election::Hooks hooks;
    hooks.candidacy = [raw]() -> std::optional<Candidacy> {
      if (!raw->voter) return std::nullopt;
      Candidacy cd;
      cd.log_epoch = 1;
      cd.last = raw->last;
      return cd;
    };
    hooks.won = [raw](uint32_t e) { raw->won = e; };
    hooks.follow = [raw](const std::string& h) { raw->following = h; };
    hooks.leader_lost = [raw] {
      raw->following.reset();
      ++raw->lost;
    };
    c->election = std::make_unique<Election>(1, host, zk, c->session, q, nullptr, hooks);
    nodes.push_back(std::move(c));
    return *raw;
  }

  void run(Tick until, const std::string& silent = "") {
    while (q.now() < until) {
      for (auto& n : nodes) {
        if (n->host != silent && zk.session_alive(n->session)) zk.heartbeat(n->session);
      }
      q.run_until(std::min(until, q.now() + 200));
    }
  }
};

TEST_F(ElectionFixture, SingleCandidacyBlocks) {
  auto& a = add("A", Lsn(1, 5));
  a.election->start();
  run(1000);
  EXPECT_FALSE(a.won);
  EXPECT_FALSE(zk.exists("/r/1/leader"));
}

TEST_F(ElectionFixture, MaxLastWinsAndOthersFollow) {
  auto& a = add("A", Lsn(1, 20));
  auto& b = add("B", Lsn(1, 22));
  auto& c = add("C", Lsn(1, 21));
  for (auto& n : nodes) n->election->start();
  run(1000);
  EXPECT_EQ(b.won, 1u);
  EXPECT_FALSE(a.won);
  EXPECT_FALSE(c.won);
  EXPECT_EQ(a.following, "B");
  EXPECT_EQ(c.following, "B");
  EXPECT_EQ(*zk.get_data(a.session, "/r/1/leader"), "B");
}

TEST_F(ElectionFixture, NonVoterWaitsForLeader) {
  auto& a = add("A", Lsn(1, 20));
  auto& b = add("B", Lsn(1, 20));
  auto& c = add("C", Lsn());
  c.voter = false;
  c.election->start();
  run(500);
  EXPECT_FALSE(c.following);
  a.election->start();
  b.election->start();
  run(1500);
  EXPECT_TRUE(a.won.has_value() != b.won.has_value());
  EXPECT_TRUE(c.following.has_value());
}

TEST_F(ElectionFixture, LeaderCrashTriggersNewRoundWithHigherEpoch) {
  auto& a = add("A", Lsn(1, 20));
  auto& b = add("B", Lsn(1, 21));
  auto& c = add("C", Lsn(1, 20));
  for (auto& n : nodes) n->election->start();
  run(1000);
  ASSERT_EQ(b.won, 1u);
  // B goes silent; its session expires and the leader znode vanishes.
  run(4000, "B");
  EXPECT_EQ(a.lost, 1);
  EXPECT_EQ(c.lost, 1);
  const bool a_won = a.won.has_value();
  const bool c_won = c.won.has_value();
  EXPECT_NE(a_won, c_won);
  EXPECT_EQ(a_won ? *a.won : *c.won, 2u);
  EXPECT_EQ(a_won ? c.following : a.following, a_won ? "A" : "C");
}

}  // namespace
}  // namespace spinnaker
