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

#include <CLI11.hpp>
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "spinnaker/sim/experiments.h"

using namespace spinnaker;
using nlohmann::json;

namespace {

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

bool write_trace(const std::string& path, const std::function<void(std::ostream&)>& fill) {
  std::ofstream out(path);
  if (!out) {
    std::cerr << "cannot write " << path << "\n";
    return false;
  }
  fill(out);
  return true;
}

int cmd_run(const std::string& path, uint64_t seed, const std::string& trace_out) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << "cannot read " << path << "\n";
    return 2;
  }
  auto sc = Scenario::parse(*text);
  if (!sc) {
    std::cerr << sc.status().to_string() << "\n";
    return 2;
  }
  auto r = run_scenario(*sc, seed);
  if (!r) {
    std::cerr << r.status().to_string() << "\n";
    return 1;
  }
  if (!trace_out.empty() && !write_trace(trace_out, [&](std::ostream& o) { r->cluster->trace().write_ndjson(o); })) {
    return 2;
  }
  auto safety = check_acked_writes(*r->history);
  auto lin = check_linearizable(*r->history);
  std::printf("seed %llu, %zu events, end tick %lld, fingerprint %016llx\n", static_cast<unsigned long long>(seed),
              r->events, static_cast<long long>(r->end_tick), static_cast<unsigned long long>(r->fingerprint));
  std::printf("ops %zu, acknowledged writes %zu, lost %zu\n", r->history->ops().size(), safety.acked,
              safety.violations.size());
  for (const auto& v : safety.violations) std::printf("  lost: %s\n", v.c_str());
  std::printf("linearizability: %zu cells, %zu above bound, %zu violations\n", lin.cells, lin.too_large,
              lin.violations.size());
  for (const auto& v : lin.violations) std::printf("  not linearizable: %s/%s\n", v.key.c_str(), v.column.c_str());
  for (const auto& d : r->divergent) std::printf("  diverged: %s\n", d.c_str());
  for (const auto& n : r->notes) std::printf("  note: %s\n", n.c_str());
  return safety.ok() && lin.ok() && r->divergent.empty() ? 0 : 1;
}

int cmd_verify(const std::string& path, const std::string& check, Tick from, Tick to, Tick force_ticks) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot read " << path << "\n";
    return 2;
  }
  auto events = read_ndjson(in);
  if (!events) {
    std::cerr << events.status().to_string() << "\n";
    return 2;
  }
  const auto& ev = *events;
  History h = History::from_trace(ev);
  bool ok = true;
  auto want = [&](const char* name) { return check == "all" || check == name; };
  if (want("invariants")) {
    InvariantChecker inv;
    for (size_t i = 0; i < ev.size(); ++i) inv.observe(ev[i], i);
    std::printf("invariants: %s\n", inv.violation() ? inv.violation()->c_str() : "ok");
    ok = ok && !inv.violation();
  }
  if (want("safety")) {
    auto s = check_acked_writes(h);
    std::printf("safety: %zu acknowledged writes, %zu lost\n", s.acked, s.violations.size());
    for (const auto& v : s.violations) std::printf("  %s\n", v.c_str());
    ok = ok && s.ok();
  }
  if (want("lin")) {
    auto l = check_linearizable(h);
    std::printf("linearizability: %zu cells, %zu ops, %zu above bound, %zu violations\n", l.cells, l.ops, l.too_large,
                l.violations.size());
    for (const auto& v : l.violations) {
      std::printf("  %s/%s counterexample:", v.key.c_str(), v.column.c_str());
      for (const auto& op : v.counterexample) std::printf(" #%llu", static_cast<unsigned long long>(op.id));
      std::printf("\n");
    }
    ok = ok && l.ok();
  }
  if (want("staleness")) {
    auto s = measure_staleness(ev);
    std::printf("staleness: %zu timeline reads, max %lld, mean %.2f\n", s.reads, static_cast<long long>(s.max_staleness),
                s.mean_staleness);
  }
  if (want("accounting")) {
    const Tick end = to > 0 ? to : (ev.empty() ? 0 : ev.back().tick);
    auto a = account_writes(ev, from, end, force_ticks);
    std::printf("accounting [%lld, %lld]: %zu writes, %.2f forces/write, %.2f protocol messages/write, "
                "%llu coordination calls, critical path error %lld\n",
                static_cast<long long>(from), static_cast<long long>(end), a.writes, a.forces_per_write,
                a.protocol_messages_per_write, static_cast<unsigned long long>(a.data_path_coord_calls),
                static_cast<long long>(a.worst_critical_path_error));
    for (const auto& [type, n] : a.messages_per_write) std::printf("  %s %.2f\n", type.c_str(), n);
  }
  return ok ? 0 : 1;
}

int cmd_golden(const std::string& which, const std::string& trace_out) {
  if (which != "fig10" && which != "walkthrough") {
    std::cerr << "unknown golden scenario " << which << "\n";
    return 2;
  }
  auto r = run_golden_walkthrough();
  std::cout << format_golden(r);
  if (!trace_out.empty() && !write_trace(trace_out, [&](std::ostream& o) { o << r.trace; })) return 2;
  return r.ok() ? 0 : 1;
}

int cmd_bench(const std::vector<int>& periods, Tick unit, const RecoveryBenchOptions& options) {
  std::vector<double> x, rep, un;
  std::printf("%8s %8s %12s %14s %10s\n", "period", "ticks", "reproposed", "unavailable", "detection");
  for (int k : periods) {
    auto m = measure_recovery(unit * k, options);
    std::printf("%8d %8lld %12zu %14lld %10lld\n", k, static_cast<long long>(m.commit_period), m.reproposed,
                static_cast<long long>(m.unavailability), static_cast<long long>(m.detection));
    x.push_back(static_cast<double>(m.commit_period));
    rep.push_back(static_cast<double>(m.reproposed));
    un.push_back(static_cast<double>(m.unavailability));
  }
  auto fr = fit_line(x, rep);
  auto fu = fit_line(x, un);
  std::printf("reproposed  = %.4f * period + %.1f  (R2 %.4f)\n", fr.slope, fr.intercept, fr.r2);
  std::printf("unavailable = %.4f * period + %.1f  (R2 %.4f)\n", fu.slope, fu.intercept, fu.r2);
  return 0;
}

json result_json(const ClientResult& r) {
  json j{{"code", code_name(r.code)}, {"indeterminate", r.indeterminate}, {"attempts", r.attempts}};
  if (!r.detail.empty()) j["detail"] = r.detail;
  json values = json::array();
  for (const auto& v : r.values) values.push_back(v ? json(*v) : json());
  j["values"] = values;
  j["versions"] = r.versions;
  return j;
}

// The simulated cluster advanced by the wall clock, one tick per
// millisecond, with an HTTP front end for `kv`.
int cmd_serve(size_t nodes, int port, uint64_t seed) {
  SimOptions options;
  options.seed = seed;
  options.trace = false;
  SimCluster cluster(Layout::uniform(nodes), options);
  std::mutex mu;
  std::condition_variable cv;
  cluster.start();
  Client& client = cluster.add_client();
  std::atomic<bool> stop{false};

  std::thread clock([&] {
    const auto t0 = std::chrono::steady_clock::now();
    const Tick base = cluster.now();
    while (!stop) {
      const auto ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
      {
        std::lock_guard lock(mu);
        cluster.run_until(base + ms);
      }
      cv.notify_all();
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  });

  httplib::Server server;
  server.Post("/kv", [&](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("op") || !body.contains("key")) {
      res.status = 400;
      res.set_content(R"({"error":"bad request"})", "application/json");
      return;
    }
    const std::string op = body["op"];
    ClientCall call;
    call.key = body["key"];
    ColumnWrite col{body.value("column", "c"), std::nullopt, body.value("expected", uint64_t{0}), 0};
    if (body.contains("value")) col.value = body["value"].get<std::string>();
    call.consistent = !body.value("timeline", false);
    if (op == "get") call.op = ClientOp::kGet;
    else if (op == "put") call.op = ClientOp::kPut;
    else if (op == "del") call.op = ClientOp::kDelete;
    else if (op == "cput") call.op = ClientOp::kConditionalPut;
    else if (op == "cdel") call.op = ClientOp::kConditionalDelete;
    else {
      res.status = 400;
      res.set_content(R"({"error":"unknown op"})", "application/json");
      return;
    }
    call.columns.push_back(col);
    std::unique_lock lock(mu);
    std::optional<ClientResult> out;
    client.call(call, [&](ClientResult r) { out = std::move(r); });
    cv.wait(lock, [&] { return out.has_value(); });
    res.set_content(result_json(*out).dump(), "application/json");
  });
  server.Get("/status", [&](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mu);
    json j{{"tick", cluster.now()}, {"leaders", json::object()}};
    for (CohortId r = 0; r < cluster.layout().ranges().size(); ++r) {
      auto l = cluster.leader(r);
      j["leaders"][std::to_string(r)] = l ? json(cluster.layout().nodes()[*l]) : json();
    }
    res.set_content(j.dump(), "application/json");
  });
  std::printf("serving %zu simulated nodes on 127.0.0.1:%d\n", nodes, port);
  std::fflush(stdout);
  const bool ok = server.listen("127.0.0.1", port);
  stop = true;
  clock.join();
  return ok ? 0 : 1;
}

int cmd_kv(const std::string& op, const std::vector<std::string>& args, int port, bool timeline) {
  const size_t need = (op == "get" || op == "del") ? 2 : op == "put" ? 3 : op == "cput" ? 4 : 0;
  if (need == 0 || args.size() != need) {
    std::cerr << "usage: kv get|del <key> <column> | put <key> <column> <value> | "
                 "cput <key> <column> <value> <expected-version>\n";
    return 2;
  }
  json body{{"op", op}, {"key", args[0]}, {"column", args[1]}, {"timeline", timeline}};
  if (need >= 3) body["value"] = args[2];
  if (need == 4) body["expected"] = std::stoull(args[3]);
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(30, 0);
  auto res = cli.Post("/kv", body.dump(), "application/json");
  if (!res) {
    std::cerr << "no cluster on port " << port << " (start one with: spinnaker_sim serve)\n";
    return 2;
  }
  std::cout << res->body << "\n";
  auto j = json::parse(res->body, nullptr, false);
  return !j.is_discarded() && j.value("code", "") == "Ok" ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replicated key-value store simulator"};
  app.require_subcommand(1);

  std::string scenario_path, trace_out;
  uint64_t seed = 1;
  auto* run = app.add_subcommand("run", "Run a scenario script");
  run->add_option("scenario", scenario_path)->required();
  run->add_option("--seed", seed);
  run->add_option("--trace", trace_out, "Write the NDJSON trace here");

  std::string trace_in, check = "all";
  Tick from = 0, to = 0, force_ticks = WalOptions{}.force_base_ticks;
  auto* verify = app.add_subcommand("verify", "Check a recorded trace");
  verify->add_option("trace", trace_in)->required();
  verify->add_option("--check", check)
      ->check(CLI::IsMember({"all", "lin", "safety", "accounting", "staleness", "invariants"}));
  verify->add_option("--from", from, "Accounting window start tick");
  verify->add_option("--to", to, "Accounting window end tick");
  verify->add_option("--force-ticks", force_ticks);

  std::string which;
  auto* golden = app.add_subcommand("golden", "Run a golden scenario");
  golden->add_option("name", which)->required();
  golden->add_option("--trace", trace_out);

  std::vector<int> periods{1, 2, 4, 8};
  Tick unit = 500;
  RecoveryBenchOptions bench_opts;
  auto* bench = app.add_subcommand("bench-recovery", "Leader recovery time against commit period");
  bench->add_option("--periods", periods)->delimiter(',');
  bench->add_option("--unit", unit, "Ticks per period unit");
  bench->add_option("--write-interval", bench_opts.write_interval);
  bench->add_option("--seed", bench_opts.seed);

  size_t nodes = 3;
  int port = 7070;
  auto* serve = app.add_subcommand("serve", "Run a simulated cluster on the wall clock for kv");
  serve->add_option("--nodes", nodes);
  serve->add_option("--port", port);
  serve->add_option("--seed", seed);

  std::string kv_op;
  std::vector<std::string> kv_args;
  bool timeline = false;
  auto* kv = app.add_subcommand("kv", "Talk to a running cluster");
  kv->add_option("op", kv_op)->required()->check(CLI::IsMember({"get", "put", "del", "cput"}));
  kv->add_option("args", kv_args);
  kv->add_option("--port", port);
  kv->add_flag("--timeline", timeline, "Allow a stale read from any replica");

  CLI11_PARSE(app, argc, argv);
  if (*run) return cmd_run(scenario_path, seed, trace_out);
  if (*verify) return cmd_verify(trace_in, check, from, to, force_ticks);
  if (*golden) return cmd_golden(which, trace_out);
  if (*bench) return cmd_bench(periods, unit, bench_opts);
  if (*serve) return cmd_serve(nodes, port, seed);
  if (*kv) return cmd_kv(kv_op, kv_args, port, timeline);
  return 0;
}
