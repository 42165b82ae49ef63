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

#include "spinnaker/common/status.h"

namespace spinnaker {

const char* code_name(Code code) {
  switch (code) {
    case Code::kOk: return "Ok";
    case Code::kDiskFailed: return "DiskFailed";
    case Code::kStreamViolation: return "StreamViolation";
    case Code::kSegmentRolledOver: return "SegmentRolledOver";
    case Code::kRetentionViolation: return "RetentionViolation";
    case Code::kCorruptLog: return "CorruptLog";
    case Code::kPrecondition: return "Precondition";
    case Code::kNotFound: return "NotFound";
    case Code::kConditionCheckFailed: return "ConditionCheckFailed";
    case Code::kNotLeader: return "NotLeader";
    case Code::kUnavailable: return "Unavailable";
    case Code::kStaleEpoch: return "StaleEpoch";
    case Code::kGapDetected: return "GapDetected";
    case Code::kLeaderLost: return "LeaderLost";
    case Code::kQuorumLost: return "QuorumLost";
    case Code::kElectionSuperseded: return "ElectionSuperseded";
    case Code::kCoordinationUnavailable: return "CoordinationUnavailable";
    case Code::kNodeExists: return "NodeExists";
    case Code::kNoNode: return "NoNode";
    case Code::kNoParent: return "NoParent";
    case Code::kSessionExpired: return "SessionExpired";
    case Code::kBadVersion: return "BadVersion";
    case Code::kBadLayout: return "BadLayout";
    case Code::kRangeUnavailable: return "RangeUnavailable";
    case Code::kScriptError: return "ScriptError";
    case Code::kInvariantViolation: return "InvariantViolation";
    case Code::kHistoryTooLarge: return "HistoryTooLarge";
    case Code::kParseError: return "ParseError";
  }
  return "Unknown";
}

std::string Status::to_string() const {
  if (message_.empty()) return code_name(code_);
  return std::string(code_name(code_)) + ": " + message_;
}

}  // namespace spinnaker
