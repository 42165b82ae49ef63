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

#include "spinnaker/sim/oracles.h"

#include <algorithm>
#include <functional>
#include <limits>
#include <unordered_set>

namespace spinnaker {

namespace {

constexpr Tick kNever = std::numeric_limits<Tick>::max();

struct Register {
  std::optional<std::string> value;
  uint64_t version = 0;
};

struct LinOp {
  const HistoryOp* op;
  Tick invoked;
  Tick completed;  // kNever when the op may still take effect
  bool required;   // must appear in every legal order
};

bool is_strong_read(const HistoryOp& op) {
  return !op.is_write() && op.consistent && op.completed && (op.code == Code::kOk || op.code == Code::kNotFound);
}

bool relevant(const HistoryOp& op) {
  if (is_strong_read(op)) return true;
  if (!op.is_write()) return false;
  // Rejected before reaching the log.
  if (op.completed && !op.indeterminate && op.code == Code::kPrecondition) return false;
  return true;
}

// Applies `op` to `reg`. Returns false when the op cannot take effect from
// this state with the outcome the client observed.
bool step(const HistoryOp& op, bool required, Register& reg) {
  const bool conditional = op.op == ClientOp::kConditionalPut || op.op == ClientOp::kConditionalDelete;
  const bool matches = !conditional || reg.version == op.expected_version;
  switch (op.op) {
    case ClientOp::kGet:
      if (op.code == Code::kNotFound) return reg.version == 0;
      return reg.value == op.value && reg.version == op.version;
    case ClientOp::kPut:
    case ClientOp::kDelete:
    case ClientOp::kConditionalPut:
    case ClientOp::kConditionalDelete:
      break;
  }
  if (required && op.code == Code::kConditionCheckFailed) return !matches;
  if (!matches) return false;
  const uint64_t next = reg.version + 1;
  if (required && op.version != 0 && op.version != next) return false;
  reg.version = next;
  if (op.op == ClientOp::kDelete || op.op == ClientOp::kConditionalDelete) {
    reg.value.reset();
  } else {
    reg.value = op.value;
  }
  return true;
}

class Search {
 public:
  explicit Search(std::vector<LinOp> ops) : ops_(std::move(ops)), done_(ops_.size(), false) {
    for (const auto& o : ops_) required_left_ += o.required ? 1 : 0;
  }

  bool run() { return dfs(Register{}); }
  const std::vector<uint64_t>& order() const { return order_; }

 private:
  std::string memo_key(const Register& reg) const {
    std::string k;
    k.reserve(done_.size() + 32);
    for (bool b : done_) k.push_back(b ? '1' : '0');
    k += '|';
    k += std::to_string(reg.version);
    k += '|';
    k += reg.value ? "v" + *reg.value : "-";
    return k;
  }

  bool dfs(const Register& reg) {
    if (required_left_ == 0) return true;
    if (!seen_.insert(memo_key(reg)).second) return false;
    Tick horizon = kNever;
    for (size_t i = 0; i < ops_.size(); ++i) {
      if (!done_[i] && ops_[i].required) horizon = std::min(horizon, ops_[i].completed);
    }
    for (size_t i = 0; i < ops_.size(); ++i) {
      if (done_[i] || ops_[i].invoked > horizon) continue;
      Register next = reg;
      if (!step(*ops_[i].op, ops_[i].required, next)) continue;
      done_[i] = true;
      required_left_ -= ops_[i].required ? 1 : 0;
      order_.push_back(ops_[i].op->id);
      if (dfs(next)) return true;
      order_.pop_back();
      required_left_ += ops_[i].required ? 1 : 0;
      done_[i] = false;
    }
    return false;
  }

  std::vector<LinOp> ops_;
  std::vector<bool> done_;
  size_t required_left_ = 0;
  std::unordered_set<std::string> seen_;
  std::vector<uint64_t> order_;
};

std::vector<LinOp> to_lin_ops(const std::vector<HistoryOp>& ops) {
  std::vector<LinOp> out;
  for (const auto& op : ops) {
    if (!relevant(op)) continue;
    const bool open = op.maybe_applied();
    out.push_back(LinOp{&op, op.invoked, open ? kNever : *op.completed, !open});
  }
  std::sort(out.begin(), out.end(), [](const LinOp& a, const LinOp& b) {
    return a.invoked != b.invoked ? a.invoked < b.invoked : a.op->id < b.op->id;
  });
  return out;
}

bool linearizable(const std::vector<HistoryOp>& ops, std::vector<uint64_t>* witness) {
  Search s(to_lin_ops(ops));
  const bool ok = s.run();
  if (ok && witness) *witness = s.order();
  return ok;
}

std::string column_signature(const nlohmann::json& columns) { return columns.dump(); }

}  // namespace

size_t max_cell_concurrency(const std::vector<HistoryOp>& ops) {
  std::vector<std::pair<Tick, int>> edges;
  for (const auto& op : ops) {
    if (!relevant(op)) continue;
    edges.emplace_back(op.invoked, 1);
    if (!op.maybe_applied()) edges.emplace_back(*op.completed, -1);
  }
  // Opens sort before closes at the same tick.
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second > b.second;
  });
  int live = 0;
  int peak = 0;
  for (const auto& [t, d] : edges) {
    live += d;
    peak = std::max(peak, live);
  }
  return static_cast<size_t>(peak);
}

Result<LinearizabilityResult> check_cell_linearizable(const std::vector<HistoryOp>& ops,
                                                       const LinearizabilityOptions& options) {
  LinearizabilityResult r;
  if (!ops.empty()) {
    r.key = ops.front().key;
    r.column = ops.front().column;
  }
  const size_t width = max_cell_concurrency(ops);
  if (width > options.max_concurrency) {
    return make_error(Code::kHistoryTooLarge, std::to_string(width) + " concurrent ops on " + r.key + "/" + r.column);
  }
  if (linearizable(ops, &r.witness)) return r;
  r.ok = false;
  // Versions are exact, so dropping an acknowledged write breaks every later
  // op. Shrink to the shortest failing prefix, then drop the reads and
  // unanswered writes that are not needed for the failure.
  std::vector<HistoryOp> core;
  for (const auto& op : ops) {
    if (relevant(op)) core.push_back(op);
  }
  std::stable_sort(core.begin(), core.end(),
                   [](const HistoryOp& a, const HistoryOp& b) { return a.invoked < b.invoked; });
  for (size_t n = 1; n <= core.size(); ++n) {
    std::vector<HistoryOp> prefix(core.begin(), core.begin() + static_cast<std::ptrdiff_t>(n));
    if (!linearizable(prefix, nullptr)) {
      core = std::move(prefix);
      break;
    }
  }
  for (size_t i = 0; i < core.size();) {
    if (core[i].is_write() && !core[i].maybe_applied()) {
      ++i;
      continue;
    }
    std::vector<HistoryOp> trial = core;
    trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
    if (!linearizable(trial, nullptr)) {
      core = std::move(trial);
    } else {
      ++i;
    }
  }
  r.counterexample = std::move(core);
  return r;
}

LinearizabilityReport check_linearizable(const History& history, const LinearizabilityOptions& options) {
  std::map<CellKey, std::vector<HistoryOp>> cells;
  for (const auto& op : history.ops()) {
    if (relevant(op)) cells[CellKey{op.key, op.column}].push_back(op);
  }
  LinearizabilityReport report;
  for (auto& [cell, ops] : cells) {
    ++report.cells;
    report.ops += ops.size();
    auto r = check_cell_linearizable(ops, options);
    if (!r) {
      ++report.too_large;
      continue;
    }
    if (!r->ok) report.violations.push_back(std::move(*r));
  }
  return report;
}

SafetyReport check_acked_writes(const History& history) {
  std::map<CellKey, const HistoryOp*> finals;
  // cell -> version -> acknowledged write that produced it
  std::map<CellKey, std::map<uint64_t, const HistoryOp*>> produced;
  SafetyReport report;
  auto name = [](const HistoryOp& op) {
    return "write #" + std::to_string(op.id) + " " + op.key + "/" + op.column + " version " +
           std::to_string(op.version);
  };
  for (const auto& op : history.ops()) {
    if (op.final_read && is_strong_read(op)) finals[CellKey{op.key, op.column}] = &op;
    if (!op.acked()) continue;
    ++report.acked;
    auto [it, fresh] = produced[CellKey{op.key, op.column}].emplace(op.version, &op);
    // Versions count committed writes, so two acknowledged writes can only
    // share one if the first was lost.
    if (!fresh && it->second->value != op.value) {
      report.violations.push_back(name(*it->second) + ": overwritten by " + name(op) + " at the same version");
    }
  }
  for (const auto& op : history.ops()) {
    if (op.is_write() || !op.completed || op.code != Code::kOk) continue;
    auto cell = produced.find(CellKey{op.key, op.column});
    if (cell == produced.end()) continue;
    auto w = cell->second.find(op.version);
    if (w != cell->second.end() && w->second->value != op.value) {
      report.violations.push_back(name(*w->second) + ": read #" + std::to_string(op.id) +
                                  " saw another value at that version");
    }
  }
  for (const auto& [cell, versions] : produced) {
    const HistoryOp& newest = *versions.rbegin()->second;
    auto it = finals.find(cell);
    if (it == finals.end()) {
      report.violations.push_back(name(newest) + ": cell not readable after quiesce");
      continue;
    }
    const HistoryOp& fin = *it->second;
    if (fin.version < newest.version) {
      report.violations.push_back(name(newest) + ": lost, final version " + std::to_string(fin.version));
    } else if (fin.version == newest.version && fin.value != newest.value) {
      report.violations.push_back(name(newest) + ": final read holds another value");
    }
  }
  return report;
}

StalenessReport measure_staleness(const std::vector<TraceEvent>& events) {
  // cell -> version -> first tick a leader committed it
  std::map<CellKey, std::map<uint64_t, Tick>> commits;
  StalenessReport report;
  double total = 0;
  for (const auto& e : events) {
    if (e.component != "replica") continue;
    if (e.kind == "commit") {
      const std::string key = e.fields.at("key").get<std::string>();
      for (const auto& c : e.fields.at("columns")) {
        auto& first = commits[CellKey{key, c.at("column").get<std::string>()}];
        first.emplace(c.at("version").get<uint64_t>(), e.tick);
      }
    } else if (e.kind == "read" && !e.fields.at("strong").get<bool>()) {
      const std::string key = e.fields.at("key").get<std::string>();
      const auto& cols = e.fields.at("columns");
      const auto& versions = e.fields.at("versions");
      for (size_t i = 0; i < cols.size(); ++i) {
        const uint64_t seen = i < versions.size() ? versions[i].get<uint64_t>() : 0;
        Tick stale = 0;
        auto it = commits.find(CellKey{key, cols[i].get<std::string>()});
        if (it != commits.end()) {
          Tick newest = kNever;
          for (auto v = it->second.upper_bound(seen); v != it->second.end(); ++v) newest = std::min(newest, v->second);
          if (newest != kNever) stale = e.tick - newest;
        }
        ++report.reads;
        total += static_cast<double>(stale);
        report.max_staleness = std::max(report.max_staleness, stale);
      }
    }
  }
  if (report.reads > 0) report.mean_staleness = total / static_cast<double>(report.reads);
  return report;
}

AccountingReport account_writes(const std::vector<TraceEvent>& events, Tick from, Tick to, Tick force_ticks) {
  AccountingReport report;
  struct NetEv {
    Tick sent;
    Tick recv;
    uint64_t from;
    uint64_t to;
    uint64_t cohort;
    Lsn lsn;
  };
  std::vector<NetEv> proposes;
  std::vector<NetEv> acks;
  std::map<std::pair<uint64_t, std::string>, Tick> propose_tick;
  std::map<std::string, uint64_t> by_type;
  uint64_t forces = 0;
  std::vector<std::tuple<uint64_t, Lsn, Tick>> commits;
  for (const auto& e : events) {
    if (e.tick < from || e.tick > to) continue;
    const auto& f = e.fields;
    if (e.component == "net" && e.kind == "msg_send") {
      const auto type = f.at("type").get<std::string>();
      if (type != "client_request" && type != "client_response") ++by_type[type];
    } else if (e.component == "net" && e.kind == "msg_recv") {
      const auto type = f.at("type").get<std::string>();
      if (type != "propose" && type != "ack") continue;
      NetEv n{f.at("sent").get<Tick>(), e.tick, f.at("from").get<uint64_t>(), f.at("to").get<uint64_t>(),
              f.at("cohort").get<uint64_t>(), Lsn::parse(f.at("lsn").get<std::string>()).value_or(Lsn())};
      (type == "propose" ? proposes : acks).push_back(n);
    } else if (e.component == "coord" && e.kind == "coord_call") {
      ++report.data_path_coord_calls;
    } else if (e.kind == "log_force") {
      if (f.at("records").get<uint64_t>() > 0 && f.at("started").get<Tick>() >= from) ++forces;
    } else if (e.component == "replica" && e.kind == "propose") {
      propose_tick[{f.at("cohort").get<uint64_t>(), f.at("lsn").get<std::string>()}] = e.tick;
    } else if (e.component == "replica" && e.kind == "commit") {
      commits.emplace_back(f.at("cohort").get<uint64_t>(), Lsn::parse(f.at("lsn").get<std::string>()).value_or(Lsn()),
                           e.tick);
    }
  }
  report.writes = commits.size();
  if (report.writes == 0) return report;
  const double n = static_cast<double>(report.writes);
  for (const auto& [type, count] : by_type) report.messages_per_write[type] = static_cast<double>(count) / n;
  report.forces_per_write = static_cast<double>(forces) / n;
  report.protocol_messages_per_write =
      static_cast<double>(by_type["propose"] + by_type["ack"]) / n;
  for (const auto& [cohort, lsn, tc] : commits) {
    auto pt = propose_tick.find({cohort, lsn.to_string()});
    if (pt == propose_tick.end()) continue;
    const Tick tp = pt->second;
    // First acknowledgement covering this LSN to reach the leader.
    const NetEv* first = nullptr;
    for (const auto& a : acks) {
      if (a.cohort == cohort && a.lsn >= lsn && a.recv >= tp && (!first || a.recv < first->recv)) first = &a;
    }
    if (!first) continue;
    const NetEv* prop = nullptr;
    for (const auto& p : proposes) {
      if (p.cohort == cohort && p.lsn == lsn && p.to == first->from) prop = &p;
    }
    if (!prop) continue;
    const Tick predicted = (prop->recv - prop->sent) + force_ticks + (first->recv - first->sent);
    const Tick measured = tc - tp;
    report.commit_latencies.push_back(measured);
    report.predicted_latencies.push_back(predicted);
    report.worst_critical_path_error = std::max(report.worst_critical_path_error, std::abs(measured - predicted));
  }
  return report;
}

void InvariantChecker::observe(const TraceEvent& e, size_t index) {
  if (violation_ || (e.component != "replica" && e.component != "election")) return;
  auto fail = [&](std::string what) {
    violation_ = std::move(what);
    index_ = index;
  };
  if (e.kind == "elected") {
    const auto key = std::make_pair(e.fields.at("cohort").get<uint64_t>(), e.fields.at("epoch").get<uint64_t>());
    const auto host = e.fields.at("host").get<std::string>();
    auto [it, fresh] = elected_.emplace(key, host);
    if (!fresh && it->second != host) {
      fail("two leaders for cohort " + std::to_string(key.first) + " epoch " + std::to_string(key.second) + ": " +
           it->second + " and " + host);
    }
  } else if (e.kind == "commit") {
    const auto key = std::make_pair(e.fields.at("cohort").get<uint64_t>(), e.fields.at("lsn").get<std::string>());
    const std::string sig = e.fields.at("key").get<std::string>() + column_signature(e.fields.at("columns"));
    auto [it, fresh] = committed_.emplace(key, sig);
    if (!fresh && it->second != sig) {
      fail("cohort " + std::to_string(key.first) + " committed two different writes at " + key.second);
    }
  }
}

}  // namespace spinnaker
