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

#include <string>
#include <vector>

#include "spinnaker/common/status.h"
#include "spinnaker/common/write_op.h"

namespace spinnaker {

// Key order: two all-digit keys compare numerically, anything else
// compares as raw bytes.
int compare_keys(const std::string& a, const std::string& b);

struct KeyRange {
  CohortId id = 0;
  std::string low;   // inclusive
  std::string high;  // inclusive
  std::vector<NodeId> cohort;  // base node first
};

// Static cluster layout: node hostnames (node id = index) and range
// assignment by chained declustering.
class Layout {
 public:
  // Range i has base node i and replicas on i+1 and i+2 (mod node count).
  // Ranges must be ordered and contiguous.
  static Result<Layout> assign(std::vector<std::string> nodes,
                               const std::vector<std::pair<std::string, std::string>>& ranges);
  // Line-oriented text:
  //   node <host>
  //   range <low> <high>
  // '#' starts a comment.
  static Result<Layout> parse(const std::string& text);
  // Evenly sized numeric ranges over [0, span).
  static Layout uniform(size_t node_count, uint64_t span = 1000);

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<KeyRange>& ranges() const { return ranges_; }
  const KeyRange& range(CohortId id) const { return ranges_.at(id); }
  // The unique covering range. Keys below the first or above the last range
  // belong to the nearest edge range.
  const KeyRange& route(const std::string& key) const;
  std::vector<CohortId> cohorts_of(NodeId node) const;
  std::string to_text() const;

 private:
  std::vector<std::string> nodes_;
  std::vector<KeyRange> ranges_;
};

}  // namespace spinnaker
