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

#include <cassert>
#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace spinnaker {

enum class Code {
  kOk = 0,
  // wal
  kDiskFailed,
  kStreamViolation,
  kSegmentRolledOver,
  kRetentionViolation,
  kCorruptLog,
  // storage
  kPrecondition,
  kNotFound,
  // replication
  kConditionCheckFailed,
  kNotLeader,
  kUnavailable,
  kStaleEpoch,
  kGapDetected,
  // recovery / election
  kLeaderLost,
  kQuorumLost,
  kElectionSuperseded,
  kCoordinationUnavailable,
  // coordination
  kNodeExists,
  kNoNode,
  kNoParent,
  kSessionExpired,
  kBadVersion,
  // cluster / harness
  kBadLayout,
  kRangeUnavailable,
  kScriptError,
  kInvariantViolation,
  kHistoryTooLarge,
  kParseError,
};

const char* code_name(Code code);

class Status {
 public:
  Status() = default;
  Status(Code code, std::string message) : code_(code), message_(std::move(message)) {}

  static Status ok() { return Status(); }

  bool is_ok() const { return code_ == Code::kOk; }
  explicit operator bool() const { return is_ok(); }
  Code code() const { return code_; }
  const std::string& message() const { return message_; }

  std::string to_string() const;

  bool operator==(const Status& other) const { return code_ == other.code_; }

 private:
  Code code_ = Code::kOk;
  std::string message_;
};

inline Status make_error(Code code, std::string message = {}) {
  return Status(code, std::move(message));
}

// Value-or-error. Holds a T when ok, a non-ok Status otherwise.
template <typename T>
class Result {
 public:
  Result(T value) : data_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
  Result(Status status) : data_(std::move(status)) {  // NOLINT(google-explicit-constructor)
    assert(!std::get<Status>(data_).is_ok());
  }

  bool is_ok() const { return std::holds_alternative<T>(data_); }
  explicit operator bool() const { return is_ok(); }

  const T& value() const& { return std::get<T>(data_); }
  T& value() & { return std::get<T>(data_); }
  T&& value() && { return std::get<T>(std::move(data_)); }
  const T& operator*() const& { return value(); }
  T& operator*() & { return value(); }
  const T* operator->() const { return &value(); }
  T* operator->() { return &value(); }

  Status status() const { return is_ok() ? Status::ok() : std::get<Status>(data_); }
  Code code() const { return is_ok() ? Code::kOk : std::get<Status>(data_).code(); }

 private:
  std::variant<T, Status> data_;
};

}  // namespace spinnaker
