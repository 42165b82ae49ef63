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

#include "spinnaker/sim/history.h"

#include <sstream>

namespace spinnaker {

namespace {

std::optional<ClientOp> parse_client_op(const std::string& name) {
  for (auto op : {ClientOp::kGet, ClientOp::kPut, ClientOp::kDelete, ClientOp::kConditionalPut,
                  ClientOp::kConditionalDelete}) {
    if (name == client_op_name(op)) return op;
  }
  return std::nullopt;
}

std::optional<Code> parse_code(const std::string& name) {
  for (int c = 0; c <= static_cast<int>(Code::kParseError); ++c) {
    if (name == code_name(static_cast<Code>(c))) return static_cast<Code>(c);
  }
  return std::nullopt;
}

nlohmann::json opt_json(const std::optional<std::string>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<std::string> opt_value(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

}  // namespace

uint64_t History::begin(NodeId client, const ClientCall& call, Tick now, bool final_read) {
  HistoryOp op;
  op.id = ops_.size() + 1;
  op.client = client;
  op.op = call.op;
  op.key = call.key;
  op.consistent = call.consistent;
  op.final_read = final_read;
  op.invoked = now;
  if (!call.columns.empty()) {
    op.column = call.columns[0].column;
    if (op.is_write()) op.value = call.columns[0].value;
    op.expected_version = call.columns[0].expected_version;
  }
  trace_->record("client", "op_begin",
                 {{"id", op.id}, {"client", client}, {"op", client_op_name(op.op)}, {"key", op.key},
                  {"column", op.column}, {"consistent", op.consistent}, {"value", opt_json(op.value)},
                  {"expected", op.expected_version}, {"final", final_read}});
  ops_.push_back(std::move(op));
  return ops_.back().id;
}

void History::end(uint64_t id, const ClientResult& r, Tick now) {
  HistoryOp& op = ops_.at(id - 1);
  op.completed = now;
  op.code = r.code;
  op.indeterminate = r.indeterminate;
  if (!r.versions.empty()) op.version = r.versions[0];
  if (!op.is_write()) op.value = r.values.empty() ? std::nullopt : r.values[0];
  trace_->record("client", "op_end",
                 {{"id", id}, {"code", code_name(r.code)}, {"indeterminate", r.indeterminate},
                  {"version", op.version}, {"value", op.is_write() ? nlohmann::json() : opt_json(op.value)}});
}

History History::from_trace(const std::vector<TraceEvent>& events) {
  History h;
  std::map<uint64_t, size_t> index;
  for (const auto& e : events) {
    if (e.component != "client") continue;
    const auto& f = e.fields;
    if (e.kind == "op_begin") {
      HistoryOp op;
      op.id = f.at("id").get<uint64_t>();
      op.client = f.at("client").get<NodeId>();
      op.op = parse_client_op(f.at("op").get<std::string>()).value_or(ClientOp::kGet);
      op.key = f.at("key").get<std::string>();
      op.column = f.at("column").get<std::string>();
      op.consistent = f.at("consistent").get<bool>();
      op.value = opt_value(f.at("value"));
      op.expected_version = f.at("expected").get<uint64_t>();
      op.final_read = f.value("final", false);
      op.invoked = e.tick;
      index[op.id] = h.ops_.size();
      h.ops_.push_back(std::move(op));
    } else if (e.kind == "op_end") {
      auto it = index.find(f.at("id").get<uint64_t>());
      if (it == index.end()) continue;
      HistoryOp& op = h.ops_[it->second];
      op.completed = e.tick;
      op.code = parse_code(f.at("code").get<std::string>()).value_or(Code::kUnavailable);
      op.indeterminate = f.at("indeterminate").get<bool>();
      op.version = f.at("version").get<uint64_t>();
      if (!op.is_write()) op.value = opt_value(f.at("value"));
    }
  }
  return h;
}

Result<WorkloadSpec> WorkloadSpec::parse(std::string_view text) {
  WorkloadSpec spec;
  std::istringstream in{std::string(text)};
  std::string field;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
    return out;
  };
  while (in >> field) {
    auto eq = field.find('=');
    if (eq == std::string::npos) return make_error(Code::kScriptError, "workload field without '=': " + field);
    const std::string name = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    try {
      if (name == "keys") {
        spec.keys = split(value);
      } else if (name == "columns") {
        spec.columns = split(value);
      } else if (name == "ops") {
        spec.ops = std::stoi(value);
      } else if (name == "reads") {
        spec.reads = std::stod(value);
      } else if (name == "timeline") {
        spec.timeline = std::stod(value);
      } else if (name == "cput") {
        spec.cput = std::stod(value);
      } else if (name == "del") {
        spec.del = std::stod(value);
      } else if (name == "think") {
        spec.think = std::stoll(value);
      } else if (name == "start") {
        spec.start = std::stoll(value);
      } else if (name == "bytes") {
        spec.value_bytes = std::stoull(value);
      } else {
        return make_error(Code::kScriptError, "unknown workload field: " + name);
      }
    } catch (const std::exception&) {
      return make_error(Code::kScriptError, "bad workload value: " + field);
    }
  }
  if (spec.keys.empty() || spec.columns.empty()) return make_error(Code::kScriptError, "workload needs keys and columns");
  if (spec.reads + spec.timeline + spec.cput + spec.del > 1.0) {
    return make_error(Code::kScriptError, "workload mix exceeds 1");
  }
  return spec;
}

void Workload::add_clients(int count, const WorkloadSpec& spec) {
  for (int i = 0; i < count; ++i) {
    auto d = std::make_unique<Driver>();
    d->client = &cluster_.add_client();
    d->spec = spec;
    d->rng.seed(seed_ * 1000003 + drivers_.size());
    drivers_.push_back(std::move(d));
    ++running_;
    const size_t idx = drivers_.size() - 1;
    cluster_.queue().at(spec.start, [this, idx] { next(idx); });
  }
}

void Workload::next(size_t idx) {
  Driver& d = *drivers_[idx];
  if (d.issued >= d.spec.ops) {
    --running_;
    return;
  }
  ++d.issued;
  std::uniform_int_distribution<size_t> pick_key(0, d.spec.keys.size() - 1);
  std::uniform_int_distribution<size_t> pick_col(0, d.spec.columns.size() - 1);
  std::uniform_real_distribution<double> mix(0.0, 1.0);
  ClientCall call;
  call.key = d.spec.keys[pick_key(d.rng)];
  const std::string column = d.spec.columns[pick_col(d.rng)];
  const double roll = mix(d.rng);
  const uint64_t seen = d.seen[CellKey{call.key, column}];
  std::string value = "v" + std::to_string(d.client->id()) + "-" + std::to_string(++values_);
  if (value.size() < d.spec.value_bytes) value.resize(d.spec.value_bytes, '.');
  if (roll < d.spec.reads) {
    call.op = ClientOp::kGet;
    call.columns = {ColumnWrite{column, std::nullopt, 0, 0}};
  } else if (roll < d.spec.reads + d.spec.timeline) {
    call.op = ClientOp::kGet;
    call.consistent = false;
    call.columns = {ColumnWrite{column, std::nullopt, 0, 0}};
  } else if (roll < d.spec.reads + d.spec.timeline + d.spec.cput) {
    call.op = ClientOp::kConditionalPut;
    call.columns = {ColumnWrite{column, value, seen, 0}};
  } else if (roll < d.spec.reads + d.spec.timeline + d.spec.cput + d.spec.del) {
    call.op = ClientOp::kDelete;
    call.columns = {ColumnWrite{column, std::nullopt, 0, 0}};
  } else {
    call.op = ClientOp::kPut;
    call.columns = {ColumnWrite{column, value, 0, 0}};
  }
  const uint64_t id = history_.begin(d.client->id(), call, cluster_.now());
  CellKey cell{call.key, column};
  d.client->call(std::move(call), [this, idx, id, cell](ClientResult r) {
    Driver& d = *drivers_[idx];
    history_.end(id, r, cluster_.now());
    if (r.code == Code::kOk && !r.versions.empty()) d.seen[cell] = std::max(d.seen[cell], r.versions[0]);
    cluster_.queue().schedule(d.spec.think, [this, idx] { next(idx); });
  });
}

}  // namespace spinnaker
