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

#include "spinnaker/cluster/layout.h"

#include <algorithm>
#include <sstream>

namespace spinnaker {

namespace {

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string strip_zeros(const std::string& s) {
  const auto first = s.find_first_not_of('0');
  return first == std::string::npos ? "0" : s.substr(first);
}

// Decimal successor of an all-digit string.
std::string successor(std::string s) {
  s = strip_zeros(s);
  int i = static_cast<int>(s.size()) - 1;
  while (i >= 0 && s[i] == '9') s[i--] = '0';
  if (i < 0) return "1" + s;
  ++s[i];
  return s;
}

}  // namespace

int compare_keys(const std::string& a, const std::string& b) {
  if (all_digits(a) && all_digits(b)) {
    const std::string x = strip_zeros(a);
    const std::string y = strip_zeros(b);
    if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
    return x.compare(y) < 0 ? -1 : (x == y ? 0 : 1);
  }
  const int c = a.compare(b);
  return c < 0 ? -1 : (c == 0 ? 0 : 1);
}

Result<Layout> Layout::assign(std::vector<std::string> nodes,
                              const std::vector<std::pair<std::string, std::string>>& ranges) {
  if (nodes.size() < 3) return make_error(Code::kBadLayout, "need at least 3 nodes, got " + std::to_string(nodes.size()));
  if (ranges.size() != nodes.size()) {
    return make_error(Code::kBadLayout, "need one base range per node");
  }
  for (size_t i = 0; i < nodes.size(); ++i) {
    for (size_t j = i + 1; j < nodes.size(); ++j) {
      if (nodes[i] == nodes[j]) return make_error(Code::kBadLayout, "duplicate node " + nodes[i]);
    }
  }
  Layout l;
  l.nodes_ = std::move(nodes);
  const size_t n = l.nodes_.size();
  for (size_t i = 0; i < ranges.size(); ++i) {
    const auto& [low, high] = ranges[i];
    if (compare_keys(low, high) > 0) return make_error(Code::kBadLayout, "empty range [" + low + ", " + high + "]");
    if (i > 0) {
      const std::string& prev = ranges[i - 1].second;
      const bool numeric = all_digits(prev) && all_digits(low);
      if (numeric ? strip_zeros(low) != successor(prev) : compare_keys(prev, low) >= 0) {
        return make_error(Code::kBadLayout, "range starting at " + low + " does not follow " + prev);
      }
    }
    KeyRange r;
    r.id = static_cast<CohortId>(i);
    r.low = low;
    r.high = high;
    for (size_t k = 0; k < 3; ++k) r.cohort.push_back(static_cast<NodeId>((i + k) % n));
    l.ranges_.push_back(std::move(r));
  }
  return l;
}

Result<Layout> Layout::parse(const std::string& text) {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> ranges;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string verb;
    if (!(ls >> verb)) continue;
    if (verb == "node") {
      std::string host;
      if (!(ls >> host)) return make_error(Code::kParseError, "line " + std::to_string(lineno) + ": node needs a host");
      nodes.push_back(host);
    } else if (verb == "range") {
      std::string lo, hi;
      if (!(ls >> lo >> hi)) {
        return make_error(Code::kParseError, "line " + std::to_string(lineno) + ": range needs low and high");
      }
      ranges.emplace_back(lo, hi);
    } else {
      return make_error(Code::kParseError, "line " + std::to_string(lineno) + ": unknown directive " + verb);
    }
  }
  return assign(std::move(nodes), ranges);
}

Layout Layout::uniform(size_t node_count, uint64_t span) {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> ranges;
  const uint64_t width = span / node_count;
  for (size_t i = 0; i < node_count; ++i) {
    nodes.push_back(std::string(1, static_cast<char>('A' + i % 26)) + (i >= 26 ? std::to_string(i / 26) : ""));
    const uint64_t lo = i * width;
    const uint64_t hi = i + 1 == node_count ? span - 1 : lo + width - 1;
    ranges.emplace_back(std::to_string(lo), std::to_string(hi));
  }
  return *assign(std::move(nodes), ranges);
}

const KeyRange& Layout::route(const std::string& key) const {
  // Last range whose low bound is <= key.
  size_t lo = 0, hi = ranges_.size();
  while (hi - lo > 1) {
    const size_t mid = (lo + hi) / 2;
    if (compare_keys(ranges_[mid].low, key) <= 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return ranges_[lo];
}

std::vector<CohortId> Layout::cohorts_of(NodeId node) const {
  std::vector<CohortId> out;
  for (const auto& r : ranges_) {
    if (std::find(r.cohort.begin(), r.cohort.end(), node) != r.cohort.end()) out.push_back(r.id);
  }
  return out;
}

std::string Layout::to_text() const {
  std::string out;
  for (const auto& n : nodes_) out += "node " + n + "\n";
  for (const auto& r : ranges_) out += "range " + r.low + " " + r.high + "\n";
  return out;
}

}  // namespace spinnaker
