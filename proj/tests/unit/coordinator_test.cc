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

#include "spinnaker/coordination/coordinator.h"

namespace spinnaker {
namespace {

struct CoordFixture : ::testing::Test {
  EventQueue q;
  Coordinator zk{q};
  SessionId s = zk.open_session("A");

  void SetUp() override { zk.ensure_path("/r/1/candidates"); }
  // Keeps `s` alive while time passes.
  void run_with_heartbeats(Tick until) {
    while (q.now() < until) {
      zk.heartbeat(s);
      q.run_until(std::min(until, q.now() + 500));
    }
  }
};

TEST_F(CoordFixture, SequentialCounter) {
  EXPECT_EQ(*zk.create(s, "/r/1/candidates/c-", "x", ZMode::kEphemeral, true), "/r/1/candidates/c-0000000001");
  EXPECT_EQ(*zk.create(s, "/r/1/candidates/c-", "y", ZMode::kEphemeral, true), "/r/1/candidates/c-0000000002");
  ZStat st;
  ASSERT_TRUE(zk.get_data(s, "/r/1/candidates/c-0000000002", &st));
  EXPECT_EQ(st.sequence, 2);
}

TEST_F(CoordFixture, SequenceNeverReused) {
  auto a = zk.create(s, "/r/1/candidates/c-", "", ZMode::kEphemeral, true);
  ASSERT_TRUE(zk.remove(s, *a));
  EXPECT_EQ(*zk.create(s, "/r/1/candidates/c-", "", ZMode::kEphemeral, true), "/r/1/candidates/c-0000000002");
}

TEST_F(CoordFixture, CreateErrors) {
  ASSERT_TRUE(zk.create(s, "/r/1/leader", "A", ZMode::kEphemeral));
  EXPECT_EQ(zk.create(s, "/r/1/leader", "B", ZMode::kEphemeral).code(), Code::kNodeExists);
  EXPECT_EQ(zk.create(s, "/r/9/leader", "B", ZMode::kEphemeral).code(), Code::kNoParent);
  EXPECT_EQ(zk.get_data(s, "/nope").code(), Code::kNoNode);
  EXPECT_EQ(zk.remove(s, "/nope").code(), Code::kNoNode);
}

TEST_F(CoordFixture, EphemeralVanishesOnExpiryAndWatchFires) {
  SessionId other = zk.open_session("B");
  ASSERT_TRUE(zk.create(s, "/r/1/leader", "A", ZMode::kEphemeral));
  int fired = 0;
  ASSERT_TRUE(zk.watch(other, "/r/1/leader", WatchKind::kData, [&](const WatchEvent& e) {
    ++fired;
    EXPECT_EQ(e.type, WatchEvent::kDeleted);
    EXPECT_EQ(e.path, "/r/1/leader");
  }));
  // `other` keeps heartbeating; `s` goes silent.
  for (Tick t = 0; t < 2500; t += 500) {
    zk.heartbeat(other);
    q.run_until(t + 500);
  }
  EXPECT_FALSE(zk.session_alive(s));
  EXPECT_TRUE(zk.session_alive(other));
  EXPECT_FALSE(zk.exists("/r/1/leader"));
  EXPECT_EQ(fired, 1);
  EXPECT_EQ(zk.heartbeat(s).code(), Code::kSessionExpired);
  EXPECT_EQ(zk.create(s, "/r/1/x", "", ZMode::kPersistent).code(), Code::kSessionExpired);
}

TEST_F(CoordFixture, ExpiryAtExactlyTheTimeout) {
  ASSERT_TRUE(zk.create(s, "/r/1/leader", "A", ZMode::kEphemeral));
  q.run_until(1999);
  EXPECT_TRUE(zk.exists("/r/1/leader"));
  q.run_until(2000);
  EXPECT_FALSE(zk.exists("/r/1/leader"));
}

TEST_F(CoordFixture, SteadyHeartbeatsNeverExpire) {
  ASSERT_TRUE(zk.create(s, "/r/1/leader", "A", ZMode::kEphemeral));
  run_with_heartbeats(20000);
  EXPECT_TRUE(zk.session_alive(s));
  EXPECT_TRUE(zk.exists("/r/1/leader"));
}

TEST_F(CoordFixture, RestartWithinTimeoutGetsDistinctSession) {
  ASSERT_TRUE(zk.create(s, "/r/1/leader", "A", ZMode::kEphemeral));
  q.run_until(300);
  SessionId again = zk.open_session("A");
  EXPECT_NE(again, s);
  EXPECT_EQ(zk.create(again, "/r/1/leader", "A", ZMode::kEphemeral).code(), Code::kNodeExists);
  for (Tick t = 300; t < 2600; t += 400) {
    zk.heartbeat(again);
    q.run_until(t + 400);
  }
  EXPECT_FALSE(zk.exists("/r/1/leader"));
  EXPECT_TRUE(zk.session_alive(again));
}

TEST_F(CoordFixture, ChildrenSortedBySequence) {
  EXPECT_TRUE(zk.get_children(s, "/r/1/candidates")->empty());
  for (int i = 0; i < 12; ++i) zk.create(s, "/r/1/candidates/c-", "", ZMode::kEphemeral, true);
  auto kids = zk.get_children(s, "/r/1/candidates");
  ASSERT_EQ(kids->size(), 12u);
  EXPECT_EQ(kids->front(), "c-0000000001");
  EXPECT_EQ(kids->back(), "c-0000000012");
}

TEST_F(CoordFixture, SetDataRoundTripsAndCas) {
  ASSERT_TRUE(zk.create(s, "/r/1/epoch", "1", ZMode::kPersistent));
  std::string bytes("\x00\x01\xff", 3);
  ASSERT_TRUE(zk.set_data(s, "/r/1/epoch", bytes));
  ZStat st;
  EXPECT_EQ(*zk.get_data(s, "/r/1/epoch", &st), bytes);
  EXPECT_EQ(st.version, 1);
  EXPECT_EQ(zk.set_data(s, "/r/1/epoch", "x", 0).code(), Code::kBadVersion);
  EXPECT_TRUE(zk.set_data(s, "/r/1/epoch", "x", 1));
}

TEST_F(CoordFixture, WatchIsOneShot) {
  int fired = 0;
  ASSERT_TRUE(zk.watch(s, "/r/1/candidates", WatchKind::kChildren, [&](const WatchEvent&) { ++fired; }));
  zk.create(s, "/r/1/candidates/c-", "", ZMode::kEphemeral, true);
  zk.create(s, "/r/1/candidates/c-", "", ZMode::kEphemeral, true);
  q.run_all();
  EXPECT_EQ(fired, 1);
}

TEST_F(CoordFixture, DeleteFiresWatchOnceWithPath) {
  ASSERT_TRUE(zk.create(s, "/r/1/leader", "A", ZMode::kEphemeral));
  std::vector<std::string> seen;
  ASSERT_TRUE(zk.watch(s, "/r/1/leader", WatchKind::kData, [&](const WatchEvent& e) { seen.push_back(e.path); }));
  ASSERT_TRUE(zk.remove(s, "/r/1/leader"));
  q.run_until(10);
  EXPECT_EQ(seen, (std::vector<std::string>{"/r/1/leader"}));
}

TEST_F(CoordFixture, ExpiredWatcherGetsNothing) {
  SessionId other = zk.open_session("B");
  ASSERT_TRUE(zk.create(other, "/r/1/leader", "B", ZMode::kPersistent));
  int fired = 0;
  ASSERT_TRUE(zk.watch(s, "/r/1/leader", WatchKind::kData, [&](const WatchEvent&) { ++fired; }));
  zk.close_session(s);
  ASSERT_TRUE(zk.remove(other, "/r/1/leader"));
  q.run_until(10);
  EXPECT_EQ(fired, 0);
}

TEST_F(CoordFixture, OutageFreezesExpiry) {
  ASSERT_TRUE(zk.create(s, "/r/1/leader", "A", ZMode::kEphemeral));
  q.run_until(1000);
  zk.set_available(false);
  EXPECT_EQ(zk.heartbeat(s).code(), Code::kCoordinationUnavailable);
  EXPECT_EQ(zk.get_data(s, "/r/1/leader").code(), Code::kCoordinationUnavailable);
  q.run_until(5000);
  EXPECT_TRUE(zk.exists("/r/1/leader"));
  zk.set_available(true);
  run_with_heartbeats(9000);
  EXPECT_TRUE(zk.exists("/r/1/leader"));
}

}  // namespace
}  // namespace spinnaker
