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

#include <memory>
#include <string>
#include <vector>

#include "spinnaker/sim/cluster.h"
#include "spinnaker/sim/history.h"
#include "spinnaker/sim/oracles.h"

namespace spinnaker {

struct ScenarioStep {
  Tick at = 0;
  std::string action;
  std::vector<std::string> args;
  int line = 0;
};

// Line-oriented scenario script:
//   layout uniform <nodes> [span]      or   node <host> / range <low> <high>
//   set <option> <value>
//   client <n> workload <field=value ...>
//   at <tick> <action> <args...>
//   end <tick>                          faults stop, the cluster quiesces
//   settle <ticks>
// Actions: crash, restart, wipe, replace, destroy <node>; pause, resume
// <a> <b>; isolate, heal <node>; coord down|up; put <key> <column> <value>;
// get <key> <column> [timeline]; del <key> <column>;
// cput <key> <column> <value> <expected-version>.
struct Scenario {
  std::string text;
  Layout layout = Layout::uniform(3);
  SimOptions options;
  std::vector<std::pair<int, WorkloadSpec>> workloads;
  std::vector<ScenarioStep> steps;
  Tick end = 0;
  Tick settle = 15000;
  bool quiesce = true;

  static Result<Scenario> parse(const std::string& text);
  // Script lines up to and including `tick`, for reproducing a failure.
  std::string prefix_through(Tick tick) const;
};

struct RunOptions {
  bool trace = true;
  bool check_invariants = true;
};

struct ScenarioResult {
  std::unique_ptr<SimCluster> cluster;
  std::unique_ptr<History> history;
  uint64_t fingerprint = 0;
  size_t events = 0;
  Tick end_tick = 0;
  // Cohorts whose serving replicas disagree after the run quiesced.
  std::vector<std::string> divergent;
  std::vector<std::string> notes;
};

// Runs the script. With quiesce on, faults stop at the end tick: links heal,
// coordination returns and every node not destroyed restarts; after the
// settle period a fresh client reads back every cell the run touched.
Result<ScenarioResult> run_scenario(const Scenario& scenario, uint64_t seed, const RunOptions& options = {});

}  // namespace spinnaker
