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
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spinnaker/common/status.h"
#include "spinnaker/wal/wal.h"

namespace spinnaker {

inline constexpr uint8_t kProtocolVersion = 1;
// version 1B, type 1B, cohort 4B, epoch 2B, body length 4B.
inline constexpr size_t kMessageHeaderBytes = 12;

enum class MsgType : uint8_t {
  kPropose = 1,
  kAck = 2,
  kCommit = 3,
  kCatchUpRequest = 4,
  kCatchUpData = 5,
  kCatchUpAck = 6,
  kCatchUpDone = 7,
  kTakeoverCommit = 8,
  kRePropose = 9,
  kSyncAck = 10,
  kClientRequest = 11,
  kClientResponse = 12,
};

const char* msg_type_name(MsgType t);

struct ProposeMsg {
  LogRecord record;
  Lsn committed;  // piggybacked commit point; zero when not piggybacking
};

struct AckMsg {
  Lsn lsn;  // cumulative: every proposal up to here is durable
};

struct CommitMsg {
  Lsn up_to;
};

struct CatchUpRequestMsg {
  Lsn committed;
  Lsn last;
};

// Committed writes in (from, through] plus the full list of committed LSNs
// in that range, so the receiver can drop anything it logged that is not
// part of the leader's history. CatchUpDone and RePropose additionally carry
// the leader's uncommitted tail.
struct SyncBatchMsg {
  Lsn from;
  Lsn through;
  std::vector<LoggedWrite> writes;
  std::vector<Lsn> lsns;
  std::vector<LoggedWrite> pending;      // records the receiver may lack
  std::vector<Lsn> pending_lsns;         // entire uncommitted tail
};

struct CatchUpAckMsg {
  Lsn through;
};

struct SyncAckMsg {
  Lsn last;
};

enum class ClientOp : uint8_t {
  kGet = 1,
  kPut = 2,
  kDelete = 3,
  kConditionalPut = 4,
  kConditionalDelete = 5,
};

const char* client_op_name(ClientOp op);

struct ClientRequestMsg {
  uint64_t request_id = 0;
  ClientOp op = ClientOp::kGet;
  bool consistent = true;
  std::string key;
  // One entry per column. Values are ignored for deletes and gets.
  std::vector<ColumnWrite> columns;
};

struct ClientResponseMsg {
  uint64_t request_id = 0;
  Code code = Code::kOk;
  std::string detail;
  // For reads: per column value (nullopt = deleted or never written) and
  // version (0 = never written). For writes: produced versions.
  std::vector<std::optional<std::string>> values;
  std::vector<uint64_t> versions;
};

using MessageBody = std::variant<ProposeMsg, AckMsg, CommitMsg, CatchUpRequestMsg, SyncBatchMsg, CatchUpAckMsg,
                                 SyncAckMsg, ClientRequestMsg, ClientResponseMsg>;

struct Message {
  MsgType type = MsgType::kAck;
  CohortId cohort = 0;
  uint32_t epoch = 0;
  MessageBody body;

  template <typename T>
  const T& as() const {
    return std::get<T>(body);
  }
};

Bytes encode_message(const Message& m);
Result<Message> decode_message(std::span<const uint8_t> bytes);

}  // namespace spinnaker
