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

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

namespace spinnaker {

using Tick = int64_t;

// Timer surface the state machines see. The simulator implements it; unit
// tests drive an EventQueue directly.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual Tick now() const = 0;
  virtual void schedule(Tick delay, std::function<void()> fn) = 0;
};

// Discrete-event queue. Events run in (time, insertion order) order, so two
// runs that insert the same events produce the same execution.
class EventQueue : public Scheduler {
 public:
  Tick now() const override { return now_; }
  void schedule(Tick delay, std::function<void()> fn) override {
    at(now_ + (delay < 0 ? 0 : delay), std::move(fn));
  }
  void at(Tick when, std::function<void()> fn) {
    heap_.push(Entry{when < now_ ? now_ : when, next_seq_++, std::move(fn)});
  }

  bool empty() const { return heap_.empty(); }
  size_t pending() const { return heap_.size(); }
  Tick next_time() const { return heap_.empty() ? now_ : heap_.top().when; }

  // Runs one event. Returns false when the queue is empty.
  bool step() {
    if (heap_.empty()) return false;
    Entry e = std::move(const_cast<Entry&>(heap_.top()));
    heap_.pop();
    now_ = e.when;
    ++executed_;
    e.fn();
    return true;
  }

  // Runs every event with time <= `until`, then advances the clock to `until`.
  void run_until(Tick until) {
    while (!heap_.empty() && heap_.top().when <= until) step();
    if (now_ < until) now_ = until;
  }

  void run_all(uint64_t max_events = UINT64_MAX) {
    while (max_events-- > 0 && step()) {
    }
  }

  uint64_t executed() const { return executed_; }

 private:
  struct Entry {
    Tick when;
    uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.when != b.when ? a.when > b.when : a.seq > b.seq;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  Tick now_ = 0;
  uint64_t next_seq_ = 0;
  uint64_t executed_ = 0;
};

}  // namespace spinnaker
