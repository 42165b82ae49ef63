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

#include <cmath>
#include <random>

#include "spinnaker/recovery/recovery.h"
#include "spinnaker/sim/experiments.h"

namespace spinnaker {

namespace {

bool run_until(SimCluster& c, Tick limit, const std::function<bool()>& done) {
  const Tick stop = c.now() + limit;
  while (c.now() < stop) {
    if (done()) return true;
    if (c.queue().empty()) break;
    if (c.queue().next_time() > stop) break;
    c.queue().step();
  }
  if (c.now() < stop && !done()) c.run_until(stop);
  return done();
}

// Runs one client call to completion.
ClientResult call_sync(SimCluster& c, Client& client, ClientCall call, Tick limit = 20000) {
  std::optional<ClientResult> out;
  client.call(std::move(call), [&out](ClientResult r) { out = std::move(r); });
  run_until(c, limit, [&] { return out.has_value(); });
  if (!out) {
    ClientResult r;
    r.code = Code::kUnavailable;
    r.detail = "no answer";
    return r;
  }
  return *out;
}

ClientCall put_call(const std::string& key, const std::string& value) {
  return ClientCall{ClientOp::kPut, key, {ColumnWrite{"c", value, 0, 0}}, true};
}

ClientCall get_call(const std::string& key, bool consistent) {
  return ClientCall{ClientOp::kGet, key, {ColumnWrite{"c", std::nullopt, 0, 0}}, consistent};
}

std::optional<Tick> first_event(SimCluster& c, Tick after, const std::string& kind, CohortId cohort) {
  for (const auto& e : c.trace().events()) {
    if (e.tick >= after && e.kind == kind && e.fields.value("cohort", UINT32_MAX) == cohort) return e.tick;
  }
  return std::nullopt;
}

}  // namespace

RecoveryMeasurement measure_recovery(Tick commit_period, const RecoveryBenchOptions& options) {
  RecoveryMeasurement m;
  m.commit_period = commit_period;
  m.write_interval = options.write_interval;
  SimOptions sim;
  sim.seed = options.seed;
  sim.replica.commit_period = commit_period;
  sim.net.bytes_per_tick = options.bandwidth;
  SimCluster c(Layout::uniform(3), sim);
  c.start();
  run_until(c, 5000, [&] { return c.leader(0).has_value(); });
  const NodeId leader = *c.leader(0);
  const std::string leader_host = c.layout().nodes()[leader];

  Client& client = c.add_client();
  bool loading = options.write_interval > 0;
  uint64_t n = 0;
  std::function<void()> tick = [&] {
    if (!loading) return;
    const std::string key = std::to_string(n % 50);
    std::string value = "w" + std::to_string(n++);
    value.resize(std::max(value.size(), options.value_bytes), '.');
    client.put(key, "c", value, [](ClientResult) {});
    c.queue().schedule(options.write_interval, tick);
  };
  if (loading) tick();

  // The leader sends commit messages every period from the moment it
  // opened for writes; crash it just before one goes out.
  Tick opened = 0;
  for (const auto& e : c.trace().events()) {
    if (e.kind == "write_open" && e.fields.value("cohort", UINT32_MAX) == 0u && e.fields.value("node", "") == leader_host) {
      opened = e.tick;
    }
  }
  const Tick earliest = c.now() + options.warmup;
  Tick k = (earliest - opened + commit_period - 1) / commit_period;
  m.crash_at = opened + std::max<Tick>(k, 1) * commit_period - 1;
  c.run_until(m.crash_at);
  c.crash(leader);
  run_until(c, 60000, [&] {
    auto l = c.leader(0);
    return l && *l != leader;
  });
  loading = false;

  auto gone = first_event(c, m.crash_at, "leader_gone", 0);
  auto open = first_event(c, m.crash_at, "write_open", 0);
  if (gone && open) {
    m.detection = *gone - m.crash_at;
    m.unavailability = *open - *gone;
  }
  for (const auto& e : c.trace().events()) {
    if (e.tick >= m.crash_at && e.kind == "takeover" && e.fields.value("cohort", UINT32_MAX) == 0u) {
      m.reproposed = e.fields.at("reproposed").get<size_t>();
      break;
    }
  }
  return m;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0) return f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  const double mean = sy / n;
  double ss_tot = 0, ss_res = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double pred = f.slope * x[i] + f.intercept;
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  f.r2 = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return f;
}

AccountingReport run_accounting(uint64_t seed, int writes) {
  SimOptions sim;
  sim.seed = seed;
  SimCluster c(Layout::uniform(3), sim);
  c.start();
  run_until(c, 5000, [&] { return c.leader(0).has_value() && c.replica(*c.leader(0), 0)->pending() == 0; });
  Client& client = c.add_client();
  // Warm the client's leader cache so the window holds only data traffic.
  call_sync(c, client, put_call("1", "warm"));
  c.run_for(100);
  const Tick from = c.now();
  for (int i = 0; i < writes; ++i) {
    call_sync(c, client, put_call(std::to_string(i % 20), "v" + std::to_string(i)));
    c.run_for(100);
  }
  const Tick to = c.now();
  return account_writes(c.trace().events(), from, to, sim.wal.force_base_ticks);
}

StalenessReport run_staleness(uint64_t seed, bool piggyback, Tick commit_period) {
  SimOptions sim;
  sim.seed = seed;
  sim.replica.commit_period = commit_period;
  sim.replica.piggyback_commit = piggyback;
  SimCluster c(Layout::uniform(3), sim);
  c.start();
  History history(&c.trace());
  Workload load(c, history, seed);
  WorkloadSpec writer;
  writer.keys = {"100", "101"};
  writer.ops = 150;
  writer.reads = 0;
  writer.cput = 0;
  writer.del = 0;
  writer.think = 40;
  writer.start = 3000;
  WorkloadSpec reader = writer;
  reader.ops = 400;
  reader.timeline = 1.0;
  reader.think = 15;
  load.add_clients(1, writer);
  load.add_clients(2, reader);
  run_until(c, 200000, [&] { return load.finished(); });
  return measure_staleness(c.trace().events());
}

bool AvailabilityCase::ok() const {
  if (expect_writes) return write_ok && strong_read_ok && timeline_read_ok;
  return !write_ok && timeline_read_ok;
}

std::vector<AvailabilityCase> run_availability_matrix(uint64_t seed) {
  struct Pattern {
    const char* name;
    bool leader;
    int followers;
  };
  const Pattern patterns[] = {
      {"leader down", true, 0},
      {"follower down", false, 1},
      {"leader and follower down", true, 1},
      {"both followers down", false, 2},
  };
  std::vector<AvailabilityCase> out;
  for (const auto& p : patterns) {
    SimOptions sim;
    sim.seed = seed;
    SimCluster c(Layout::uniform(3), sim);
    c.start();
    run_until(c, 5000, [&] { return c.leader(0).has_value(); });
    const NodeId leader = *c.leader(0);
    std::vector<NodeId> followers;
    for (NodeId id : c.layout().range(0).cohort) {
      if (id != leader) followers.push_back(id);
    }
    Client& client = c.add_client();
    call_sync(c, client, put_call("100", "before"));
    c.run_for(sim.replica.commit_period + 100);

    if (p.leader) c.crash(leader);
    for (int i = 0; i < p.followers; ++i) c.crash(followers[static_cast<size_t>(i)]);
    // Long enough for the coordination service to notice and a new leader
    // to take over when one can.
    c.run_for(sim.coord.session_timeout + 3000);

    // A fresh client, so no call goes to a cached dead leader.
    Client& after = c.add_client();
    AvailabilityCase a;
    a.pattern = p.name;
    a.alive = 3 - (p.leader ? 1 : 0) - p.followers;
    a.expect_writes = a.alive >= 2;
    auto w = call_sync(c, after, put_call("100", "after"));
    a.write_ok = w.code == Code::kOk;
    auto s = call_sync(c, after, get_call("100", true));
    a.strong_read_ok = s.code == Code::kOk && !s.values.empty() && s.values[0] == (a.write_ok ? "after" : "before");
    auto t = call_sync(c, after, get_call("100", false));
    a.timeline_read_ok = t.code == Code::kOk && !t.values.empty() && t.values[0].has_value();
    out.push_back(a);
  }
  return out;
}

namespace {

struct CatchUpRun {
  std::map<CohortId, Bytes> follower;
  std::map<CohortId, Bytes> leader;
  bool crashed_mid_catchup = false;
  bool converged = false;
  NodeId node = 0;
  SimDisk disk_at_crash;
};

// Workload, then a follower crash while writes continue, then its return.
// With `mid_crash` the follower fails again while applying catch-up data.
CatchUpRun run_catchup(uint64_t seed, bool mid_crash) {
  std::mt19937_64 rng(seed);
  SimOptions sim;
  sim.seed = seed;
  sim.torn_writes = true;
  sim.replica.commit_period = 500;
  sim.replica.flush_threshold = (seed % 2 == 0) ? 8 : 0;
  SimCluster c(Layout::uniform(3), sim);
  c.start();
  run_until(c, 5000, [&] { return c.leader(0).has_value(); });
  const NodeId leader = *c.leader(0);
  const NodeId follower = (leader + 1 + static_cast<NodeId>(rng() % 2)) % 3;
  const std::string host = c.layout().nodes()[follower];

  History history(&c.trace());
  Workload load(c, history, seed);
  WorkloadSpec spec;
  spec.keys = {"10", "20", "400", "800"};
  spec.columns = {"a", "b"};
  spec.ops = 60;
  spec.think = 40;
  spec.start = c.now();
  load.add_clients(2, spec);

  const Tick crash_at = c.now() + 500 + static_cast<Tick>(rng() % 2000);
  c.run_until(crash_at);
  c.crash(follower);
  run_until(c, 100000, [&] { return load.finished(); });
  c.run_for(200);

  CatchUpRun out;
  out.node = follower;
  out.disk_at_crash = c.disk(follower);
  const Tick delay = static_cast<Tick>(rng() % 12);
  if (mid_crash) {
    c.trace().set_observer([&](const TraceEvent& e, size_t) {
      if (out.crashed_mid_catchup || e.kind != "sync_data" || e.fields.value("node", "") != host) return;
      out.crashed_mid_catchup = true;
      c.queue().schedule(delay, [&c, follower] { c.crash(follower); });
      c.queue().schedule(delay + 200, [&c, follower] { c.restart(follower); });
    });
  }
  c.restart(follower);
  auto caught_up = [&] {
    if (!c.up(follower)) return false;
    for (CohortId r : c.layout().cohorts_of(follower)) {
      auto l = c.leader(r);
      auto* f = c.replica(follower, r);
      if (!l || !f || !f->serving() || f->committed() != c.replica(*l, r)->committed()) return false;
    }
    return true;
  };
  c.run_for(50);
  out.converged = run_until(c, 60000, caught_up);
  c.run_for(sim.replica.commit_period + 50);
  for (CohortId r : c.layout().cohorts_of(follower)) {
    out.follower[r] = c.replica(follower, r)->store().snapshot_bytes();
    if (auto l = c.leader(r)) out.leader[r] = c.replica(*l, r)->store().snapshot_bytes();
  }
  return out;
}

// Local recovery of every cohort on a standalone copy of `disk`. With
// `passes` > 1 the node "crashes" after each pass and recovers again from
// whatever the previous pass left on disk.
std::map<CohortId, Bytes> recover_offline(SimDisk disk, const Layout& layout, NodeId node, int passes) {
  std::map<CohortId, Bytes> out;
  for (int pass = 0; pass < passes; ++pass) {
    EventQueue q;
    Coordinator coord(q);
    Wal wal(disk, q, WalOptions{});
    auto scan = wal.open();
    for (CohortId r : layout.cohorts_of(node)) {
      ReplicaEnv env;
      env.self = node;
      env.host = layout.nodes()[node];
      env.sched = &q;
      env.wal = &wal;
      env.disk = &disk;
      env.coord = &coord;
      env.session = coord.open_session(env.host);
      env.send = [](NodeId, const Message&) {};
      env.resolve = [](const std::string&) { return std::nullopt; };
      CohortReplica rep(r, layout.range(r).cohort, env);
      rep.recover_local(scan);
      q.run_all();
      out[r] = rep.store().snapshot_bytes();
    }
  }
  return out;
}

}  // namespace

IdempotenceOutcome run_idempotence(uint64_t seed) {
  IdempotenceOutcome o;
  o.seed = seed;
  CatchUpRun once = run_catchup(seed, false);
  CatchUpRun again = run_catchup(seed, true);
  o.crashed_mid_catchup = again.crashed_mid_catchup;

  // Both runs share everything up to the first restart, so their disks match.
  if (once.disk_at_crash.fingerprint() != again.disk_at_crash.fingerprint()) {
    o.detail = "runs diverged before the restart";
    return o;
  }
  const Layout layout = Layout::uniform(3);
  auto single = recover_offline(once.disk_at_crash, layout, once.node, 1);
  auto twice = recover_offline(once.disk_at_crash, layout, once.node, 2);
  o.recover_twice_identical = single == twice;
  if (!o.recover_twice_identical) o.detail += "second local recovery changed the store; ";

  o.crash_mid_catchup_identical = once.converged && again.converged && once.follower == again.follower &&
                                  once.follower == once.leader;
  if (!once.converged || !again.converged) o.detail += "follower did not catch up; ";
  else if (once.follower != again.follower) o.detail += "crash during catch-up changed the follower's store; ";
  else if (once.follower != once.leader) o.detail += "follower differs from leader; ";
  return o;
}

}  // namespace spinnaker
