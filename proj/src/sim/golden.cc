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

#include <sstream>

#include "spinnaker/recovery/recovery.h"
#include "spinnaker/sim/experiments.h"

namespace spinnaker {

namespace {

constexpr CohortId kCohort = 0;

WriteOp epoch_one_write(uint64_t seq) {
  WriteOp op = WriteOp::put(std::to_string(seq), "c", "v1." + std::to_string(seq));
  op.columns[0].version = 1;
  return op;
}

// Lays down a log holding 1.1..1.<lst> and a commit marker at 1.<cmt>, as a
// node that ran epoch 1 would have left it.
void prepare_disk(SimDisk& disk, uint64_t lst, uint64_t cmt) {
  EventQueue q;
  Wal wal(disk, q, WalOptions{});
  wal.open();
  std::vector<LogRecord> recs;
  for (uint64_t seq = 1; seq <= lst; ++seq) recs.push_back(LogRecord::write(kCohort, Lsn(1, seq), epoch_one_write(seq)));
  wal.append_forced(recs, [](Status) {});
  wal.append_non_forced(LogRecord::marker(kCohort, Lsn(1, cmt)));
  wal.append_forced(std::span<const LogRecord>(), [](Status) {});
  q.run_all();
  store_log_epoch(disk, kCohort, 1);
  store_log_epoch(disk, 1, 0);
  store_log_epoch(disk, 2, 0);
}

// (cmt, lst) a node would recover to from its disk alone.
std::pair<Lsn, Lsn> disk_view(const SimDisk& disk) {
  SimDisk copy = disk;
  EventQueue q;
  Wal wal(copy, q, WalOptions{});
  auto scan = wal.open();
  CohortStore store(kCohort, &copy);
  store.load();
  Lsn cmt = std::max({last_committed_marker(scan, kCohort), store.checkpoint_lsn(), wal.reclaimed_through(kCohort)});
  return {cmt, wal.last_lsn(kCohort)};
}

GoldenStage snapshot(SimCluster& c, const std::string& name) {
  GoldenStage st;
  st.name = name;
  for (NodeId id = 0; id < c.node_count(); ++id) {
    ReplicaSnapshot s;
    s.host = c.layout().nodes()[id];
    if (auto* r = c.replica(id, kCohort)) {
      s.up = true;
      s.leader = r->role() == Role::kLeader;
      s.cmt = r->committed();
      s.lst = r->last();
      if (s.leader) st.epoch = r->epoch();
    } else {
      std::tie(s.cmt, s.lst) = disk_view(c.disk(id));
    }
    st.nodes.push_back(s);
  }
  return st;
}

ReplicaSnapshot expect(const char* host, bool up, bool leader, Lsn cmt, Lsn lst) {
  return ReplicaSnapshot{host, up, leader, cmt, lst};
}

std::string describe(const ReplicaSnapshot& s) {
  return s.host + (s.up ? "" : " (down)") + (s.leader ? " (leader)" : "") + " cmt=" + s.cmt.to_string() +
         " lst=" + s.lst.to_string();
}

std::vector<Lsn> lsn_range(uint32_t epoch, uint64_t from, uint64_t to) {
  std::vector<Lsn> out;
  for (uint64_t s = from; s <= to; ++s) out.emplace_back(epoch, s);
  return out;
}

std::string lsn_list(const std::vector<Lsn>& lsns) {
  std::string out;
  for (const auto& l : lsns) out += (out.empty() ? "" : " ") + l.to_string();
  return out;
}

bool run_until(SimCluster& c, Tick limit, const std::function<bool()>& done) {
  const Tick stop = c.now() + limit;
  while (c.now() < stop) {
    if (done()) return true;
    if (c.queue().empty()) return done();
    c.queue().step();
  }
  return done();
}

}  // namespace

GoldenReport run_golden_walkthrough() {
  GoldenReport report;
  auto layout = Layout::assign({"A", "B", "C"}, {{"0", "333"}, {"334", "666"}, {"667", "999"}});
  SimOptions options;
  options.replica.ship_missing_only = true;
  SimCluster c(*layout, options);
  const NodeId A = 0, B = 1, C = 2;

  // S0: A led epoch 1 and committed 1.20. Its followers last heard commit
  // point 1.10; B logged up to 1.21 and C up to 1.22, which A had not yet
  // forced when everything failed.
  prepare_disk(c.disk(A), 21, 20);
  prepare_disk(c.disk(B), 21, 10);
  prepare_disk(c.disk(C), 22, 10);
  c.coord().ensure_path(cohort_path(kCohort));
  const SessionId setup = c.coord().open_session("setup");
  c.coord().create(setup, cohort_path(kCohort) + "/epoch", "1", ZMode::kPersistent);
  c.coord().close_session(setup);

  GoldenStage s0 = snapshot(c, "S0");
  s0.epoch = 1;
  for (auto& n : s0.nodes) {
    n.up = true;
    n.leader = n.host == "A";
  }
  report.stages.push_back(s0);
  GoldenStage s1 = snapshot(c, "S1");
  s1.epoch = 1;
  report.stages.push_back(s1);

  // S1 -> S2: B comes back first, then A.
  c.start_nodes({B});
  c.run_for(20);
  c.start_nodes({A});
  run_until(c, 5000, [&] {
    auto* b = c.replica(B, kCohort);
    auto* a = c.replica(A, kCohort);
    return b && a && b->write_open() && a->committed() == b->committed();
  });
  const Tick s2_tick = c.now();
  report.stages.push_back(snapshot(c, "S2"));

  // S2 -> S3: nine new writes.
  Client& client = c.add_client();
  int done = 0;
  std::function<void(int)> write = [&](int i) {
    if (i == 9) return;
    client.put(std::to_string(100 + i), "c", "v2." + std::to_string(22 + i), [&, i](ClientResult) {
      ++done;
      write(i + 1);
    });
  };
  write(0);
  run_until(c, 5000, [&] { return done == 9; });
  run_until(c, options.replica.commit_period + 100, [&] {
    return c.replica(A, kCohort)->committed() == c.replica(B, kCohort)->committed();
  });
  report.stages.push_back(snapshot(c, "S3"));

  // S3 -> S4: C returns and catches up.
  c.restart(C);
  run_until(c, 5000, [&] {
    auto* cr = c.replica(C, kCohort);
    return cr && cr->serving() && cr->committed() == c.replica(B, kCohort)->committed();
  });
  report.stages.push_back(snapshot(c, "S4"));

  Tick open_tick = -1;
  for (const auto& e : c.trace().events()) {
    if (e.component != "replica" || e.fields.value("cohort", 99) != kCohort) continue;
    const std::string node = e.fields.value("node", "");
    if (node == "B" && e.kind == "write_open" && open_tick < 0) open_tick = e.tick;
    if (node == "B" && e.kind == "commit") {
      auto lsn = Lsn::parse(e.fields.at("lsn").get<std::string>()).value_or(Lsn());
      (open_tick < 0 ? report.reproposed : report.new_writes).push_back(lsn);
    }
    if (node == "B" && e.kind == "repropose" && e.fields.value("follower", 99u) == A && e.tick <= s2_tick) {
      report.shipped_to_old_leader = e.fields.at("records").get<size_t>();
    }
  }
  if (Wal* wc = c.wal(C)) {
    const auto& skipped = wc->skipped(kCohort);
    report.truncated_on_c.assign(skipped.begin(), skipped.end());
    if (auto recs = wc->read_from(kCohort, Lsn(1, 10))) {
      for (const auto& r : *recs) report.caught_up_on_c.push_back(r.lsn);
    }
  }

  // Expected states, cohort of A, B and C.
  const Lsn l110(1, 10), l120(1, 20), l121(1, 21), l122(1, 22), l230(2, 30);
  const std::vector<std::pair<std::vector<ReplicaSnapshot>, uint32_t>> expected = {
      {{expect("A", true, true, l120, l121), expect("B", true, false, l110, l121),
        expect("C", true, false, l110, l122)},
       1},
      {{expect("A", false, false, l120, l121), expect("B", false, false, l110, l121),
        expect("C", false, false, l110, l122)},
       1},
      {{expect("A", true, false, l121, l121), expect("B", true, true, l121, l121),
        expect("C", false, false, l110, l122)},
       2},
      {{expect("A", true, false, l230, l230), expect("B", true, true, l230, l230),
        expect("C", false, false, l110, l122)},
       2},
      {{expect("A", true, false, l230, l230), expect("B", true, true, l230, l230),
        expect("C", true, false, l230, l230)},
       2},
  };
  for (size_t i = 0; i < expected.size(); ++i) {
    const GoldenStage& got = report.stages.at(i);
    for (size_t n = 0; n < 3; ++n) {
      if (!(got.nodes[n] == expected[i].first[n])) {
        report.mismatches.push_back(got.name + ": expected " + describe(expected[i].first[n]) + ", got " +
                                    describe(got.nodes[n]));
      }
    }
    if (got.epoch != expected[i].second) {
      report.mismatches.push_back(got.name + ": expected epoch " + std::to_string(expected[i].second) + ", got " +
                                  std::to_string(got.epoch));
    }
  }
  auto check_list = [&](const char* what, const std::vector<Lsn>& got, const std::vector<Lsn>& want) {
    if (got != want) report.mismatches.push_back(std::string(what) + ": expected " + lsn_list(want) + ", got " + lsn_list(got));
  };
  check_list("re-proposed by B", report.reproposed, lsn_range(1, 11, 21));
  check_list("new writes", report.new_writes, lsn_range(2, 22, 30));
  check_list("logically truncated on C", report.truncated_on_c, {l122});
  auto caught = lsn_range(1, 11, 21);
  for (const auto& l : lsn_range(2, 22, 30)) caught.push_back(l);
  check_list("C's log after 1.10", report.caught_up_on_c, caught);
  if (report.shipped_to_old_leader != 1) {
    report.mismatches.push_back("takeover shipped " + std::to_string(report.shipped_to_old_leader) +
                                " records to A, expected only 1.21");
  }

  std::ostringstream trace;
  c.trace().write_ndjson(trace);
  report.trace = trace.str();
  report.fingerprint = c.trace().fingerprint();
  return report;
}

std::string format_golden(const GoldenReport& report) {
  std::ostringstream out;
  for (const auto& st : report.stages) {
    out << st.name << "  epoch " << st.epoch << "\n";
    for (const auto& n : st.nodes) out << "  " << describe(n) << "\n";
  }
  out << "re-proposed: " << lsn_list(report.reproposed) << "\n";
  out << "shipped to A during takeover: " << report.shipped_to_old_leader << " record(s)\n";
  out << "new writes: " << lsn_list(report.new_writes) << "\n";
  out << "truncated on C: " << lsn_list(report.truncated_on_c) << "\n";
  out << "C's log after 1.10: " << lsn_list(report.caught_up_on_c) << "\n";
  for (const auto& m : report.mismatches) out << "MISMATCH " << m << "\n";
  return out.str();
}

}  // namespace spinnaker
