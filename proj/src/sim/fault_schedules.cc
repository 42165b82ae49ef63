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

#include <random>
#include <set>
#include <sstream>

#include "spinnaker/sim/experiments.h"

namespace spinnaker {

std::string random_fault_schedule(uint64_t seed, const FaultScheduleOptions& options) {
  std::mt19937_64 rng(seed * 0x2545F4914F6CDD1Dull + 7);
  auto pick = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto chance = [&rng](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };

  const int nodes = chance(0.5) ? 3 : 5;
  const Layout layout = Layout::uniform(static_cast<size_t>(nodes));
  std::ostringstream out;
  out << "# generated fault schedule, seed " << seed << "\n";
  out << "layout uniform " << nodes << "\n";
  const int periods[] = {200, 500, 1000};
  out << "set commit_period " << periods[pick(0, 2)] << "\n";
  out << "set piggyback " << (chance(0.3) ? "on" : "off") << "\n";
  out << "set ship_missing_only " << (chance(0.5) ? "on" : "off") << "\n";
  out << "set torn_writes on\n";
  const int thresholds[] = {0, 8, 32};
  out << "set flush_threshold " << thresholds[pick(0, 2)] << "\n";

  std::vector<std::string> keys;
  for (const auto& r : layout.ranges()) {
    const uint64_t low = std::stoull(r.low);
    const uint64_t high = std::stoull(r.high);
    keys.push_back(std::to_string(low + static_cast<uint64_t>(pick(0, static_cast<int>(high - low)))));
  }
  std::string key_list;
  for (const auto& k : keys) key_list += (key_list.empty() ? "" : ",") + k;
  const int clients = pick(2, 3);
  out << "client " << clients << " workload keys=" << key_list << " columns=a,b ops=" << pick(60, 100)
      << " reads=0.3 timeline=0.05 cput=0.1 del=0.05 think=" << pick(150, 350) << " start=2500\n";

  std::map<CohortId, int> wipes;
  const int faults = pick(2, 6);
  for (int i = 0; i < faults; ++i) {
    const Tick at = pick(3000, static_cast<int>(options.horizon) - 3000);
    const NodeId node = static_cast<NodeId>(pick(0, nodes - 1));
    const std::string& host = layout.nodes()[node];
    bool wipe = chance(0.2);
    if (wipe) {
      for (CohortId c : layout.cohorts_of(node)) {
        if (wipes[c] >= options.max_wipes_per_cohort) wipe = false;
      }
    }
    if (wipe) {
      for (CohortId c : layout.cohorts_of(node)) ++wipes[c];
    }
    out << "at " << at << " " << (wipe ? "wipe " : "crash ") << host << "\n";
    // Some nodes stay down until the run quiesces.
    if (chance(0.85)) out << "at " << at + pick(200, 6000) << " restart " << host << "\n";
  }
  out << "end " << options.horizon << "\n";
  return out.str();
}

ScheduleOutcome run_fault_schedule(uint64_t seed, bool trace) {
  ScheduleOutcome o;
  o.seed = seed;
  o.script = random_fault_schedule(seed);
  auto scenario = Scenario::parse(o.script);
  if (!scenario) {
    o.ok = false;
    o.problems.push_back(scenario.status().to_string());
    return o;
  }
  RunOptions run;
  run.trace = trace;
  auto r = run_scenario(*scenario, seed, run);
  if (!r) {
    o.ok = false;
    o.problems.push_back(r.status().to_string());
    return o;
  }
  o.fingerprint = r->fingerprint;
  auto safety = check_acked_writes(*r->history);
  o.acked = safety.acked;
  for (auto& v : safety.violations) o.problems.push_back("lost write: " + v);
  auto lin = check_linearizable(*r->history);
  o.lin_cells = lin.cells;
  o.lin_too_large = lin.too_large;
  for (const auto& v : lin.violations) o.problems.push_back("not linearizable: " + v.key + "/" + v.column);
  for (const auto& d : r->divergent) o.problems.push_back("replicas diverge: " + d);
  o.ok = o.problems.empty();
  return o;
}

}  // namespace spinnaker
