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
#include <vector>

#include "spinnaker/common/bytes.h"
#include "spinnaker/common/lsn.h"

namespace spinnaker {

using CohortId = uint32_t;
using NodeId = uint32_t;

enum class OpKind : uint8_t {
  kPut = 1,
  kDelete = 2,
  kConditionalPut = 3,
  kConditionalDelete = 4,
};

const char* op_kind_name(OpKind kind);

struct ColumnWrite {
  std::string column;
  std::optional<std::string> value;  // nullopt writes a tombstone
  uint64_t expected_version = 0;     // conditional kinds only
  // Version the write produces. Assigned by the leader when the LSN is
  // assigned; zero means "previous version + 1" at apply time.
  uint64_t version = 0;

  bool operator==(const ColumnWrite&) const = default;
};

// One single-row write. Multi-column variants carry several columns and are
// applied atomically under one LSN.
struct WriteOp {
  OpKind kind = OpKind::kPut;
  std::string key;
  std::vector<ColumnWrite> columns;

  bool is_conditional() const {
    return kind == OpKind::kConditionalPut || kind == OpKind::kConditionalDelete;
  }
  bool is_delete() const { return kind == OpKind::kDelete || kind == OpKind::kConditionalDelete; }

  static WriteOp put(std::string key, std::string column, std::string value);
  static WriteOp del(std::string key, std::string column);
  static WriteOp conditional_put(std::string key, std::string column, std::string value,
                                 uint64_t expected_version);
  static WriteOp conditional_delete(std::string key, std::string column, uint64_t expected_version);

  // Structural validity: at least one column, distinct column names, values
  // present exactly for put kinds.
  bool valid() const;

  bool operator==(const WriteOp&) const = default;
};

void encode_write_op(ByteWriter& w, const WriteOp& op);
std::optional<WriteOp> decode_write_op(ByteReader& r);

// A committed write together with the LSN it was committed under.
struct LoggedWrite {
  WriteOp op;
  Lsn lsn;
  bool operator==(const LoggedWrite&) const = default;
};

}  // namespace spinnaker
