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

#include <sstream>

#include "spinnaker/sim/experiments.h"

namespace spinnaker {
namespace {

HistoryOp write_op(uint64_t id, const std::string& value, Tick invoked, std::optional<Tick> completed,
                   uint64_t version) {
  HistoryOp op;
  op.id = id;
  op.op = ClientOp::kPut;
  op.key = "k";
  op.column = "c";
  op.value = value;
  op.invoked = invoked;
  op.completed = completed;
  op.version = version;
  if (!completed) op.code = Code::kUnavailable;
  return op;
}

HistoryOp read_op(uint64_t id, std::optional<std::string> value, Tick invoked, Tick completed, uint64_t version) {
  HistoryOp op;
  op.id = id;
  op.op = ClientOp::kGet;
  op.key = "k";
  op.column = "c";
  op.value = std::move(value);
  op.invoked = invoked;
  op.completed = completed;
  op.version = version;
  if (!op.value) op.code = Code::kNotFound;
  return op;
}

TEST(Linearizability, SequentialHistoryPasses) {
  std::vector<HistoryOp> ops = {read_op(1, std::nullopt, 0, 1, 0), write_op(2, "a", 2, 3, 1),
                                read_op(3, "a", 4, 5, 1), write_op(4, "b", 6, 7, 2), read_op(5, "b", 8, 9, 2)};
  auto r = check_cell_linearizable(ops);
  ASSERT_TRUE(r.is_ok());
  EXPECT_TRUE(r.value().ok);
  EXPECT_EQ(r.value().witness, (std::vector<uint64_t>{1, 2, 3, 4, 5}));
}

TEST(Linearizability, ReadOfLostUnacknowledgedWriteIsCaught) {
  // The unanswered write is observed, then the cell goes back to the older value.
  std::vector<HistoryOp> ops = {write_op(1, "a", 0, 5, 1), write_op(2, "x", 10, std::nullopt, 0),
                                read_op(3, "x", 20, 25, 2), read_op(4, "a", 30, 35, 1)};
  auto r = check_cell_linearizable(ops);
  ASSERT_TRUE(r.is_ok());
  EXPECT_FALSE(r.value().ok);
  EXPECT_FALSE(r.value().counterexample.empty());
  EXPECT_LE(r.value().counterexample.size(), ops.size());
}

TEST(Linearizability, UnansweredWriteMayNeverTakeEffect) {
  std::vector<HistoryOp> ops = {write_op(1, "a", 0, 5, 1), write_op(2, "x", 10, std::nullopt, 0),
                                read_op(3, "a", 20, 25, 1)};
  auto r = check_cell_linearizable(ops);
  ASSERT_TRUE(r.is_ok());
  EXPECT_TRUE(r.value().ok);
}

TEST(Linearizability, ConcurrentWritesEitherOrder) {
  std::vector<HistoryOp> ops = {write_op(1, "a", 0, 10, 2), write_op(2, "b", 0, 10, 1), read_op(3, "a", 11, 12, 2)};
  auto r = check_cell_linearizable(ops);
  ASSERT_TRUE(r.is_ok());
  EXPECT_TRUE(r.value().ok);
}

TEST(Linearizability, StaleStrongReadFails) {
  std::vector<HistoryOp> ops = {write_op(1, "a", 0, 5, 1), write_op(2, "b", 6, 10, 2), read_op(3, "a", 11, 12, 1)};
  auto r = check_cell_linearizable(ops);
  ASSERT_TRUE(r.is_ok());
  EXPECT_FALSE(r.value().ok);
}

TEST(Linearizability, TooManyConcurrentOpsIsRejected) {
  std::vector<HistoryOp> ops;
  for (uint64_t i = 1; i <= 9; ++i) ops.push_back(write_op(i, "v" + std::to_string(i), 0, 100, 0));
  auto r = check_cell_linearizable(ops);
  ASSERT_FALSE(r.is_ok());
  EXPECT_EQ(r.code(), Code::kHistoryTooLarge);
}

TEST(Safety, AcknowledgedWriteMissingFromFinalReadIsReported) {
  History h;
  h.add(write_op(1, "a", 0, 5, 1));
  h.add(write_op(2, "b", 6, 10, 2));
  HistoryOp last = read_op(3, "a", 100, 110, 1);
  last.final_read = true;
  h.add(last);
  auto r = check_acked_writes(h);
  EXPECT_EQ(r.acked, 2u);
  EXPECT_FALSE(r.ok());
}

TEST(Safety, FinalReadAtNewestVersionPasses) {
  History h;
  h.add(write_op(1, "a", 0, 5, 1));
  h.add(write_op(2, "b", 6, 10, 2));
  HistoryOp last = read_op(3, "b", 100, 110, 2);
  last.final_read = true;
  h.add(last);
  EXPECT_TRUE(check_acked_writes(h).ok());
}

TEST(FitLine, ExactLine) {
  auto f = fit_line({1, 2, 4, 8}, {3, 5, 9, 17});
  EXPECT_DOUBLE_EQ(f.slope, 2.0);
  EXPECT_DOUBLE_EQ(f.intercept, 1.0);
  EXPECT_DOUBLE_EQ(f.r2, 1.0);
}

TEST(Network, DeliversInOrderPerPair) {
  EventQueue q;
  SimNetwork net(q, 7);
  std::vector<uint64_t> got;
  net.attach(0, [](NodeId, const Message&) {});
  net.attach(1, [&](NodeId, const Message& m) { got.push_back(m.as<AckMsg>().lsn.seq); });
  for (uint64_t i = 1; i <= 50; ++i) net.send(0, 1, Message{MsgType::kAck, 0, 1, AckMsg{Lsn(1, i)}});
  q.run_all();
  ASSERT_EQ(got.size(), 50u);
  for (size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], i + 1);
}

TEST(Network, DetachDropsInFlight) {
  EventQueue q;
  SimNetwork net(q, 7);
  int got = 0;
  std::vector<NodeId> down;
  net.attach(0, [](NodeId, const Message&) {}, [&](NodeId p) { down.push_back(p); });
  net.attach(1, [&](NodeId, const Message&) { ++got; });
  net.send(0, 1, Message{MsgType::kAck, 0, 1, AckMsg{Lsn(1, 1)}});
  net.detach(1);
  net.attach(1, [&](NodeId, const Message&) { ++got; });
  q.run_all();
  EXPECT_EQ(got, 0);
  EXPECT_EQ(net.dropped(), 1u);
  EXPECT_EQ(down, std::vector<NodeId>{1});
}

TEST(Network, SameSeedSameArrivals) {
  auto arrivals = [](uint64_t seed) {
    EventQueue q;
    SimNetwork net(q, seed);
    std::vector<Tick> at;
    net.attach(0, [&](NodeId, const Message&) { at.push_back(q.now()); });
    net.attach(1, [&](NodeId, const Message&) { at.push_back(q.now()); });
    for (uint64_t i = 1; i <= 20; ++i) {
      net.send(0, 1, Message{MsgType::kAck, 0, 1, AckMsg{Lsn(1, i)}});
      net.send(1, 0, Message{MsgType::kAck, 0, 1, AckMsg{Lsn(1, i)}});
    }
    q.run_all();
    return at;
  };
  EXPECT_EQ(arrivals(3), arrivals(3));
}

TEST(Trace, NdjsonRoundTrip) {
  EventQueue q;
  TraceRecorder t(q, true);
  t.record("net", "msg_send", {{"from", 0}, {"to", 1}});
  t.record("replica", "commit", {{"lsn", "1.2"}});
  std::stringstream s;
  t.write_ndjson(s);
  std::string header;
  std::getline(s, header);
  EXPECT_EQ(header, TraceRecorder::header_line());
  s.seekg(0);
  auto back = read_ndjson(s);
  ASSERT_TRUE(back.is_ok());
  ASSERT_EQ(back.value().size(), 2u);
  EXPECT_EQ(back.value()[1].kind, "commit");
  EXPECT_EQ(back.value()[1].fields.at("lsn"), "1.2");
}

TEST(Scenario, ParsesDirectives) {
  auto s = Scenario::parse(
      "layout uniform 5\nset commit_period 200\nclient 2 workload keys=1,2 ops=10\nat 100 crash A\nend 500\n");
  ASSERT_TRUE(s.is_ok()) << s.status().to_string();
  EXPECT_EQ(s.value().layout.nodes().size(), 5u);
  EXPECT_EQ(s.value().options.replica.commit_period, 200);
  ASSERT_EQ(s.value().workloads.size(), 1u);
  EXPECT_EQ(s.value().workloads[0].first, 2);
  ASSERT_EQ(s.value().steps.size(), 1u);
  EXPECT_EQ(s.value().steps[0].action, "crash");
  EXPECT_EQ(s.value().end, 500);
}

TEST(Scenario, RejectsUnknownAction) {
  auto s = Scenario::parse("at 100 explode A\n");
  ASSERT_FALSE(s.is_ok());
  EXPECT_EQ(s.code(), Code::kScriptError);
}

TEST(Scenario, EmptyScriptHasNoClientOps) {
  auto s = Scenario::parse("");
  ASSERT_TRUE(s.is_ok());
  EXPECT_TRUE(s.value().steps.empty());
  auto r = run_scenario(s.value(), 1);
  ASSERT_TRUE(r.is_ok());
  EXPECT_TRUE(r.value().history->ops().empty());
}

TEST(Scenario, SameSeedSameFingerprint) {
  auto s = Scenario::parse("client 1 workload keys=5,500 ops=20\nat 4000 crash B\nat 5000 restart B\nend 7000\n");
  ASSERT_TRUE(s.is_ok());
  auto a = run_scenario(s.value(), 11);
  auto b = run_scenario(s.value(), 11);
  ASSERT_TRUE(a.is_ok());
  ASSERT_TRUE(b.is_ok());
  EXPECT_EQ(a.value().fingerprint, b.value().fingerprint);
  EXPECT_TRUE(a.value().divergent.empty());
}

TEST(Layout, ChainedDeclustering) {
  Layout l = Layout::uniform(5);
  for (CohortId r = 0; r < 5; ++r) {
    const auto& cohort = l.range(r).cohort;
    ASSERT_EQ(cohort.size(), 3u);
    for (size_t i = 0; i < 3; ++i) EXPECT_EQ(cohort[i], (r + i) % 5);
  }
}

TEST(Golden, RecoveryWalkthroughMatches) {
  auto r = run_golden_walkthrough();
  EXPECT_TRUE(r.ok()) << format_golden(r);
  EXPECT_EQ(r.stages.size(), 5u);
}

TEST(Experiments, IdleLeaderFailureReproposesNothing) {
  RecoveryBenchOptions o;
  o.write_interval = 0;
  EXPECT_EQ(measure_recovery(500, o).reproposed, 0u);
}

TEST(Experiments, FaultScheduleSeedsPass) {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    auto o = run_fault_schedule(seed);
    EXPECT_TRUE(o.ok) << "seed " << seed << ": " << (o.problems.empty() ? "" : o.problems.front());
  }
}

}  // namespace
}  // namespace spinnaker
