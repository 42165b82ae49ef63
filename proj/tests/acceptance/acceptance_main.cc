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

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "spinnaker/sim/experiments.h"

using namespace spinnaker;

namespace {

std::filesystem::path g_repro_dir = "repro";
int g_failed = 0;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(int n, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++g_failed;
  std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", n, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Stores a (script, seed) pair that replays the run.
std::filesystem::path save_repro(const std::string& name, const std::string& script, uint64_t seed) {
  std::filesystem::create_directories(g_repro_dir);
  auto path = g_repro_dir / (name + ".scenario");
  std::ofstream(path) << "# seed " << seed << "\n" << script;
  std::ofstream(g_repro_dir / (name + ".seed")) << seed << "\n";
  return path;
}

std::string ndjson(SimCluster& c) {
  std::ostringstream out;
  c.trace().write_ndjson(out);
  return out.str();
}

void golden() {
  Timer t;
  GoldenReport r = run_golden_walkthrough();
  const double s = t.seconds();
  std::string detail = r.ok() ? "all five stages match" : r.mismatches.front();
  detail += ", " + fmt("%.2fs", s);
  if (!r.ok()) std::cout << format_golden(r);
  report(1, "golden recovery walkthrough", r.ok() && s < 1.0, detail);
}

void schedules() {
  Timer t;
  const uint64_t kSeeds = 1000;
  size_t acked = 0, cells = 0, too_large = 0;
  std::vector<std::string> safety, lin;
  for (uint64_t seed = 1; seed <= kSeeds; ++seed) {
    ScheduleOutcome o = run_fault_schedule(seed);
    acked += o.acked;
    cells += o.lin_cells;
    too_large += o.lin_too_large;
    if (o.ok) continue;
    auto path = save_repro("schedule-" + std::to_string(seed), o.script, seed);
    for (const auto& p : o.problems) {
      const std::string line = "seed " + std::to_string(seed) + ": " + p + " (" + path.string() + ")";
      (p.rfind("not linearizable", 0) == 0 ? lin : safety).push_back(line);
    }
  }
  const double s = t.seconds();
  for (const auto& v : safety) std::cout << "  " << v << "\n";
  for (const auto& v : lin) std::cout << "  " << v << "\n";
  report(2, "no lost acknowledged writes", safety.empty() && s < 300,
         std::to_string(kSeeds) + " schedules, " + std::to_string(acked) + " acknowledged writes, " +
             std::to_string(safety.size()) + " violations, " + fmt("%.1fs", s));
  report(3, "linearizable strong histories", lin.empty() && cells > 0,
         std::to_string(cells) + " cells checked, " + std::to_string(too_large) + " above the concurrency bound, " +
             std::to_string(lin.size()) + " violations");
}

std::optional<std::string> leader_host_at(const std::string& workload, uint64_t seed, Tick at) {
  auto sc = Scenario::parse(workload + "end " + std::to_string(at) + "\nquiesce off\n");
  if (!sc.is_ok()) return std::nullopt;
  auto r = run_scenario(sc.value(), seed);
  if (!r.is_ok()) return std::nullopt;
  auto l = r.value().cluster->leader(0);
  if (!l) return std::nullopt;
  return r.value().cluster->layout().nodes()[*l];
}

struct Names {
  std::string leader, f1, f2;
};

std::optional<Names> cohort_names(const std::string& workload, uint64_t seed) {
  auto leader = leader_host_at(workload, seed, 3900);
  if (!leader) return std::nullopt;
  Names n{*leader, "", ""};
  for (const std::string h : {"A", "B", "C"}) {
    if (h == n.leader) continue;
    (n.f1.empty() ? n.f1 : n.f2) = h;
  }
  return n;
}

void loss_window() {
  const uint64_t seed = 1;
  const std::string workload =
      "layout uniform 3\nclient 1 workload keys=100 ops=200 reads=0 cput=0 del=0 think=20 start=3000\n";
  auto names = cohort_names(workload, seed);
  if (!names) {
    report(4, "loss window boundary", false, "no leader before the faults");
    return;
  }
  // Leader and the up-to-date follower lose their disks back to back while
  // the other follower is down.
  const std::string loss = workload + "at 4000 crash " + names->f2 + "\nat 6000 replace " + names->leader +
                           "\nat 6003 replace " + names->f1 + "\nat 6500 restart " + names->f2 +
                           "\nat 6500 restart " + names->leader + "\nat 6500 restart " + names->f1 + "\nend 9000\n";
  // Follower down, leader commits more, leader down, follower back, leader back.
  const std::string control = workload + "at 4000 crash " + names->f2 + "\nat 6000 crash " + names->leader +
                              "\nat 8000 restart " + names->f2 + "\nat 12000 restart " + names->leader +
                              "\nend 16000\n";
  auto lsc = Scenario::parse(loss);
  auto csc = Scenario::parse(control);
  if (!lsc.is_ok() || !csc.is_ok()) {
    report(4, "loss window boundary", false, "script did not parse");
    return;
  }
  auto lr = run_scenario(lsc.value(), seed);
  auto cr = run_scenario(csc.value(), seed);
  if (!lr.is_ok() || !cr.is_ok()) {
    report(4, "loss window boundary", false, "run failed: " + (lr.is_ok() ? cr.status() : lr.status()).message());
    return;
  }
  SafetyReport lost = check_acked_writes(*lr.value().history);
  SafetyReport kept = check_acked_writes(*cr.value().history);
  // While only one member is up no write may be acknowledged. A write the
  // old leader committed just before failing may still reach the client.
  size_t acked_in_gap = 0, acked_after = 0;
  for (const auto& op : cr.value().history->ops()) {
    if (!op.acked() || !op.completed) continue;
    if (*op.completed > 6010 && *op.completed <= 8000) ++acked_in_gap;
    if (*op.completed > 8000) ++acked_after;
  }
  if (!lost.ok()) save_repro("loss-window", loss, seed);
  const bool pass = !lost.ok() && kept.ok() && acked_in_gap == 0 && acked_after > 0;
  report(4, "loss window boundary", pass,
         "back-to-back disk loss of leader " + names->leader + " and follower " + names->f1 + ": " +
             std::to_string(lost.violations.size()) + " acknowledged writes lost; single-failure sequence: " +
             std::to_string(kept.violations.size()) + " lost, " + std::to_string(acked_in_gap) +
             " acknowledged with one member up, " + std::to_string(acked_after) + " after the majority returned");
}

void accounting() {
  AccountingReport a = run_accounting(1, 40);
  const bool pass = a.writes == 40 && a.forces_per_write == 3.0 && a.protocol_messages_per_write == 4.0 &&
                    a.data_path_coord_calls == 0 && a.commit_latencies.size() == a.writes &&
                    a.worst_critical_path_error <= 1;
  report(5, "protocol accounting", pass,
         std::to_string(a.writes) + " writes, " + fmt("%.2f", a.forces_per_write) + " forces and " +
             fmt("%.2f", a.protocol_messages_per_write) + " protocol messages per write, " +
             std::to_string(a.data_path_coord_calls) + " coordination calls, critical path off by at most " +
             std::to_string(a.worst_critical_path_error) + " tick(s)");
}

void recovery() {
  Timer t;
  const Tick unit = 500;
  std::vector<double> periods, reproposed, unavailable;
  std::string detail;
  bool monotonic = true;
  for (int k : {1, 2, 4, 8}) {
    RecoveryMeasurement m = measure_recovery(unit * k);
    if (!periods.empty() && (static_cast<double>(m.reproposed) <= reproposed.back() ||
                             static_cast<double>(m.unavailability) <= unavailable.back())) {
      monotonic = false;
    }
    periods.push_back(static_cast<double>(unit * k));
    reproposed.push_back(static_cast<double>(m.reproposed));
    unavailable.push_back(static_cast<double>(m.unavailability));
    detail += std::to_string(k) + "u:" + std::to_string(m.reproposed) + "/" + std::to_string(m.unavailability) + " ";
  }
  RecoveryBenchOptions idle;
  idle.write_interval = 0;
  RecoveryMeasurement quiet = measure_recovery(unit, idle);
  LinearFit fr = fit_line(periods, reproposed);
  LinearFit fu = fit_line(periods, unavailable);
  const double s = t.seconds();
  const bool pass = monotonic && fr.r2 >= 0.95 && fu.r2 >= 0.95 && quiet.reproposed == 0 && s < 60;
  report(6, "recovery time grows with commit period", pass,
         "re-proposed/unavailable ticks " + detail + "R2 " + fmt("%.3f", fr.r2) + "/" + fmt("%.3f", fu.r2) +
             ", idle re-proposals " + std::to_string(quiet.reproposed) + ", " + fmt("%.1fs", s));
}

void staleness() {
  const Tick period = 1000;
  const Tick max_delay = NetworkOptions{}.max_delay;
  bool pass = true;
  std::string detail;
  for (uint64_t seed : {1, 2, 3}) {
    StalenessReport plain = run_staleness(seed, false, period);
    StalenessReport piggy = run_staleness(seed, true, period);
    pass = pass && plain.reads > 0 && plain.max_staleness <= period + max_delay &&
           piggy.max_staleness <= period + max_delay && piggy.mean_staleness < plain.mean_staleness &&
           piggy.max_staleness < plain.max_staleness;
    detail += "seed " + std::to_string(seed) + " max " + std::to_string(plain.max_staleness) + "->" +
              std::to_string(piggy.max_staleness) + " mean " + fmt("%.1f", plain.mean_staleness) + "->" +
              fmt("%.1f", piggy.mean_staleness) + "; ";
  }
  report(7, "timeline staleness bound", pass, detail + "bound " + std::to_string(period + max_delay));
}

void availability() {
  bool pass = true;
  std::string detail;
  for (const auto& a : run_availability_matrix(1)) {
    pass = pass && a.ok();
    detail += a.pattern + " (" + std::to_string(a.alive) + " up): write " + (a.write_ok ? "ok" : "refused") +
              ", strong " + (a.strong_read_ok ? "ok" : "no") + ", timeline " + (a.timeline_read_ok ? "ok" : "no") +
              "; ";
  }
  report(8, "availability matrix", pass, detail);
}

void idempotence() {
  int ok = 0, mid = 0;
  std::string first_bad;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    IdempotenceOutcome o = run_idempotence(seed);
    if (o.ok()) ++ok;
    else if (first_bad.empty()) first_bad = " first failure seed " + std::to_string(seed) + ": " + o.detail;
    if (o.crashed_mid_catchup) ++mid;
  }
  report(9, "recovery idempotence", ok == 100 && mid == 100,
         std::to_string(ok) + "/100 identical, " + std::to_string(mid) + " crashed during catch-up" + first_bad);
}

void determinism() {
  // Replays a failing run from its stored (script, seed) pair and a random
  // fault schedule from its seed.
  std::filesystem::path script = g_repro_dir / "loss-window.scenario";
  std::filesystem::path seed_file = g_repro_dir / "loss-window.seed";
  if (!std::filesystem::exists(script)) {
    report(10, "deterministic replay", false, "no stored reproduction pair");
    return;
  }
  std::stringstream text;
  text << std::ifstream(script).rdbuf();
  uint64_t seed = 0;
  std::ifstream(seed_file) >> seed;
  auto sc = Scenario::parse(text.str());
  if (!sc.is_ok()) {
    report(10, "deterministic replay", false, "stored script did not parse");
    return;
  }
  auto a = run_scenario(sc.value(), seed);
  auto b = run_scenario(sc.value(), seed);
  const bool replay = a.is_ok() && b.is_ok() && a.value().fingerprint == b.value().fingerprint &&
                      ndjson(*a.value().cluster) == ndjson(*b.value().cluster) &&
                      !check_acked_writes(*a.value().history).ok();
  ScheduleOutcome x = run_fault_schedule(7, true);
  ScheduleOutcome y = run_fault_schedule(7, true);
  const bool schedule = x.fingerprint == y.fingerprint && x.script == y.script;
  char fp[32];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(a.is_ok() ? a.value().fingerprint : 0));
  report(10, "deterministic replay", replay && schedule,
         std::string("stored loss run replays ") + (replay ? "bit-identically" : "differently") + " (trace " + fp +
             ", " + script.string() + "), schedule seed 7 " + (schedule ? "identical" : "differs"));
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--repro-dir") g_repro_dir = argv[i + 1];
  }
  golden();
  schedules();
  loss_window();
  accounting();
  recovery();
  staleness();
  availability();
  idempotence();
  determinism();
  std::printf("%d of 10 criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
