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

#include "spinnaker/sim/scenario.h"

#include <set>
#include <sstream>

namespace spinnaker {

namespace {

std::vector<std::string> words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

Status script_error(int line, const std::string& what) {
  return make_error(Code::kScriptError, "line " + std::to_string(line) + ": " + what);
}

Result<bool> parse_flag(const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  return make_error(Code::kScriptError, "expected on/off, got " + v);
}

Status apply_setting(SimOptions& o, const std::string& name, const std::string& value) {
  try {
    if (name == "commit_period") {
      o.replica.commit_period = std::stoll(value);
    } else if (name == "piggyback") {
      auto f = parse_flag(value);
      if (!f) return f.status();
      o.replica.piggyback_commit = *f;
    } else if (name == "ship_missing_only") {
      auto f = parse_flag(value);
      if (!f) return f.status();
      o.replica.ship_missing_only = *f;
    } else if (name == "torn_writes") {
      auto f = parse_flag(value);
      if (!f) return f.status();
      o.torn_writes = *f;
    } else if (name == "flush_threshold") {
      o.replica.flush_threshold = std::stoull(value);
    } else if (name == "bandwidth") {
      o.net.bytes_per_tick = std::stoull(value);
    } else if (name == "disk_bandwidth") {
      o.wal.disk_bytes_per_tick = std::stoull(value);
    } else if (name == "min_delay") {
      o.net.min_delay = std::stoll(value);
    } else if (name == "max_delay") {
      o.net.max_delay = std::stoll(value);
    } else if (name == "force_ticks") {
      o.wal.force_base_ticks = std::stoll(value);
    } else if (name == "session_timeout") {
      o.coord.session_timeout = std::stoll(value);
    } else if (name == "attempt_timeout") {
      o.client.attempt_timeout = std::stoll(value);
    } else if (name == "deadline") {
      o.client.deadline = std::stoll(value);
    } else {
      return make_error(Code::kScriptError, "unknown setting " + name);
    }
  } catch (const std::exception&) {
    return make_error(Code::kScriptError, "bad value for " + name + ": " + value);
  }
  return Status::ok();
}

struct ActionShape {
  const char* name;
  size_t min_args;
  size_t max_args;
};

constexpr ActionShape kActions[] = {
    {"crash", 1, 1},  {"restart", 1, 1}, {"wipe", 1, 1}, {"replace", 1, 1}, {"destroy", 1, 1},
    {"pause", 2, 2},  {"resume", 2, 2},  {"isolate", 1, 1}, {"heal", 1, 1},  {"coord", 1, 1},
    {"put", 3, 3},    {"get", 2, 3},     {"del", 2, 2},  {"cput", 4, 4},
};

bool is_node_action(const std::string& a) {
  return a == "crash" || a == "restart" || a == "wipe" || a == "replace" || a == "destroy" || a == "pause" ||
         a == "resume" || a == "isolate" || a == "heal";
}

std::optional<NodeId> node_arg(const Layout& layout, const std::string& arg) {
  for (NodeId i = 0; i < layout.nodes().size(); ++i) {
    if (layout.nodes()[i] == arg) return i;
  }
  return std::nullopt;
}

}  // namespace

Result<Scenario> Scenario::parse(const std::string& text) {
  Scenario s;
  s.text = text;
  std::istringstream in(text);
  std::string raw;
  std::string layout_text;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    auto w = words(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (w.empty()) continue;
    const std::string& head = w[0];
    try {
      if (head == "layout") {
        if (w.size() < 3 || w[1] != "uniform") return script_error(line, "expected: layout uniform <nodes> [span]");
        const size_t n = std::stoull(w[2]);
        if (n < 3) return script_error(line, "a layout needs at least 3 nodes");
        s.layout = Layout::uniform(n, w.size() > 3 ? std::stoull(w[3]) : 1000);
      } else if (head == "node" || head == "range") {
        layout_text += raw + "\n";
      } else if (head == "set") {
        if (w.size() != 3) return script_error(line, "expected: set <option> <value>");
        if (auto st = apply_setting(s.options, w[1], w[2]); !st) return script_error(line, st.message());
      } else if (head == "client") {
        if (w.size() < 3 || w[2] != "workload") return script_error(line, "expected: client <n> workload <spec>");
        const int n = std::stoi(w[1]);
        std::string spec_text;
        for (size_t i = 3; i < w.size(); ++i) spec_text += w[i] + " ";
        auto spec = WorkloadSpec::parse(spec_text);
        if (!spec) return script_error(line, spec.status().message());
        s.workloads.emplace_back(n, *spec);
      } else if (head == "end") {
        if (w.size() != 2) return script_error(line, "expected: end <tick>");
        s.end = std::stoll(w[1]);
      } else if (head == "settle") {
        if (w.size() != 2) return script_error(line, "expected: settle <ticks>");
        s.settle = std::stoll(w[1]);
      } else if (head == "quiesce") {
        if (w.size() != 2) return script_error(line, "expected: quiesce on|off");
        auto f = parse_flag(w[1]);
        if (!f) return script_error(line, f.status().message());
        s.quiesce = *f;
      } else if (head == "at") {
        if (w.size() < 3) return script_error(line, "expected: at <tick> <action> <args>");
        ScenarioStep step;
        step.at = std::stoll(w[1]);
        step.action = w[2];
        step.args.assign(w.begin() + 3, w.end());
        step.line = line;
        const ActionShape* shape = nullptr;
        for (const auto& a : kActions) {
          if (step.action == a.name) shape = &a;
        }
        if (!shape) return script_error(line, "unknown action " + step.action);
        if (step.args.size() < shape->min_args || step.args.size() > shape->max_args) {
          return script_error(line, "wrong argument count for " + step.action);
        }
        if (step.action == "coord" && step.args[0] != "up" && step.args[0] != "down") {
          return script_error(line, "expected: coord up|down");
        }
        if (step.action == "get" && step.args.size() == 3 && step.args[2] != "timeline") {
          return script_error(line, "expected: get <key> <column> [timeline]");
        }
        s.steps.push_back(std::move(step));
      } else {
        return script_error(line, "unknown directive " + head);
      }
    } catch (const std::exception&) {
      return script_error(line, "bad number");
    }
  }
  if (!layout_text.empty()) {
    auto l = Layout::parse(layout_text);
    if (!l) return l.status();
    s.layout = std::move(*l);
  }
  for (const auto& step : s.steps) {
    if (!is_node_action(step.action)) continue;
    for (const auto& a : step.args) {
      if (!node_arg(s.layout, a)) return script_error(step.line, "unknown node " + a);
    }
  }
  std::stable_sort(s.steps.begin(), s.steps.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
  return s;
}

std::string Scenario::prefix_through(Tick tick) const {
  std::istringstream in(text);
  std::ostringstream out;
  std::string raw;
  while (std::getline(in, raw)) {
    auto w = words(raw);
    if (w.size() >= 2 && w[0] == "at") {
      try {
        if (std::stoll(w[1]) > tick) continue;
      } catch (const std::exception&) {
      }
    }
    if (!w.empty() && w[0] == "end") continue;
    out << raw << "\n";
  }
  return out.str();
}

Result<ScenarioResult> run_scenario(const Scenario& scenario, uint64_t seed, const RunOptions& options) {
  ScenarioResult result;
  SimOptions sim = scenario.options;
  sim.seed = seed;
  sim.trace = options.trace;
  result.cluster = std::make_unique<SimCluster>(scenario.layout, sim);
  SimCluster& c = *result.cluster;
  result.history = std::make_unique<History>(&c.trace());
  History& history = *result.history;

  InvariantChecker checker;
  if (options.check_invariants) {
    c.trace().set_observer([&checker](const TraceEvent& e, size_t index) { checker.observe(e, index); });
  }
  auto violation = [&]() -> Status {
    return make_error(Code::kInvariantViolation,
                      "event " + std::to_string(checker.violation_index()) + " at tick " + std::to_string(c.now()) +
                          ": " + *checker.violation() + "\nreproduce with seed " + std::to_string(seed) + ":\n" +
                          scenario.prefix_through(c.now()));
  };
  auto run_until = [&](Tick t, const std::function<bool()>& stop = {}) -> Status {
    EventQueue& q = c.queue();
    while (!q.empty() && q.next_time() <= t) {
      q.step();
      if (checker.violated()) return violation();
      if (stop && stop()) return Status::ok();
    }
    if (q.now() < t) q.run_until(t);
    return Status::ok();
  };

  c.start();
  Workload workload(c, history, seed);
  for (const auto& [n, spec] : scenario.workloads) workload.add_clients(n, spec);

  Client* operator_client = nullptr;
  std::set<NodeId> destroyed;
  auto op_client = [&]() -> Client& {
    if (!operator_client) operator_client = &c.add_client();
    return *operator_client;
  };
  auto issue = [&](ClientCall call, bool final_read) {
    Client& cl = op_client();
    const uint64_t id = history.begin(cl.id(), call, c.now(), final_read);
    cl.call(std::move(call), [&history, &c, id](ClientResult r) { history.end(id, r, c.now()); });
  };

  for (const auto& step : scenario.steps) {
    c.queue().at(step.at, [&, step] {
      const auto& a = step.args;
      auto node = [&](size_t i) { return *node_arg(c.layout(), a[i]); };
      if (step.action == "crash") {
        c.crash(node(0));
      } else if (step.action == "restart") {
        if (!destroyed.contains(node(0))) c.restart(node(0));
      } else if (step.action == "wipe") {
        c.wipe(node(0));
      } else if (step.action == "replace") {
        c.replace(node(0));
      } else if (step.action == "destroy") {
        c.crash(node(0));
        destroyed.insert(node(0));
      } else if (step.action == "pause") {
        c.pause(node(0), node(1));
      } else if (step.action == "resume") {
        c.resume(node(0), node(1));
      } else if (step.action == "isolate") {
        c.isolate(node(0));
      } else if (step.action == "heal") {
        c.heal(node(0));
      } else if (step.action == "coord") {
        c.set_coordination(a[0] == "up");
      } else if (step.action == "put") {
        issue(ClientCall{ClientOp::kPut, a[0], {ColumnWrite{a[1], a[2], 0, 0}}, true}, false);
      } else if (step.action == "get") {
        issue(ClientCall{ClientOp::kGet, a[0], {ColumnWrite{a[1], std::nullopt, 0, 0}}, a.size() < 3}, false);
      } else if (step.action == "del") {
        issue(ClientCall{ClientOp::kDelete, a[0], {ColumnWrite{a[1], std::nullopt, 0, 0}}, true}, false);
      } else if (step.action == "cput") {
        issue(ClientCall{ClientOp::kConditionalPut, a[0], {ColumnWrite{a[1], a[2], std::stoull(a[3]), 0}}, true},
              false);
      }
    });
  }

  Tick end = scenario.end;
  for (const auto& step : scenario.steps) end = std::max(end, step.at);
  if (auto s = run_until(end); !s) return s;

  if (scenario.quiesce) {
    c.set_coordination(true);
    for (NodeId id = 0; id < c.node_count(); ++id) {
      c.heal(id);
      if (!c.up(id) && !destroyed.contains(id)) c.restart(id);
    }
    const Tick settle_until = c.now() + scenario.settle;
    if (auto s = run_until(settle_until); !s) return s;
    // Let the workload drain, bounded so a stuck cluster still terminates.
    if (auto s = run_until(settle_until + 4 * scenario.settle, [&] { return workload.finished(); }); !s) return s;

    std::set<CellKey> cells;
    for (const auto& op : history.ops()) cells.insert(CellKey{op.key, op.column});
    for (const auto& cell : cells) {
      issue(ClientCall{ClientOp::kGet, cell.key, {ColumnWrite{cell.column, std::nullopt, 0, 0}}, true}, true);
    }
    auto reads_done = [&] { return operator_client == nullptr || operator_client->outstanding() == 0; };
    if (auto s = run_until(c.now() + 4 * scenario.settle, reads_done); !s) return s;
    if (auto s = run_until(c.now() + sim.replica.commit_period + 2 * sim.net.max_delay + 50); !s) return s;

    for (CohortId r = 0; r < c.layout().ranges().size(); ++r) {
      std::optional<Bytes> reference;
      std::string reference_node;
      for (NodeId id : c.layout().range(r).cohort) {
        auto* rep = c.replica(id, r);
        if (!rep || !rep->serving()) continue;
        Bytes snap = rep->store().snapshot_bytes();
        if (!reference) {
          reference = std::move(snap);
          reference_node = c.layout().nodes()[id];
        } else if (snap != *reference) {
          result.divergent.push_back("range " + std::to_string(r) + ": " + reference_node + " vs " +
                                     c.layout().nodes()[id]);
        }
      }
    }
  }

  result.end_tick = c.now();
  result.events = c.trace().recorded();
  result.fingerprint = c.trace().fingerprint();
  return result;
}

}  // namespace spinnaker
