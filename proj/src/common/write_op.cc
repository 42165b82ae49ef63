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

#include "spinnaker/common/write_op.h"

#include <set>

namespace spinnaker {

const char* op_kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::kPut: return "put";
    case OpKind::kDelete: return "delete";
    case OpKind::kConditionalPut: return "conditionalPut";
    case OpKind::kConditionalDelete: return "conditionalDelete";
  }
  return "?";
}

WriteOp WriteOp::put(std::string key, std::string column, std::string value) {
  return WriteOp{OpKind::kPut, std::move(key), {ColumnWrite{std::move(column), std::move(value)}}};
}

WriteOp WriteOp::del(std::string key, std::string column) {
  return WriteOp{OpKind::kDelete, std::move(key), {ColumnWrite{std::move(column), std::nullopt}}};
}

WriteOp WriteOp::conditional_put(std::string key, std::string column, std::string value,
                                 uint64_t expected_version) {
  return WriteOp{OpKind::kConditionalPut, std::move(key),
                 {ColumnWrite{std::move(column), std::move(value), expected_version}}};
}

WriteOp WriteOp::conditional_delete(std::string key, std::string column, uint64_t expected_version) {
  return WriteOp{OpKind::kConditionalDelete, std::move(key),
                 {ColumnWrite{std::move(column), std::nullopt, expected_version}}};
}

bool WriteOp::valid() const {
  if (columns.empty()) return false;
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (!seen.insert(c.column).second) return false;
    if (is_delete() == c.value.has_value()) return false;
  }
  return true;
}

void encode_write_op(ByteWriter& w, const WriteOp& op) {
  w.put_u8(static_cast<uint8_t>(op.kind));
  w.put_string(op.key);
  w.put_u32(static_cast<uint32_t>(op.columns.size()));
  for (const auto& c : op.columns) {
    w.put_string(c.column);
    w.put_u8(c.value.has_value() ? 1 : 0);
    if (c.value) w.put_string(*c.value);
    w.put_u64(c.expected_version);
    w.put_u64(c.version);
  }
}

std::optional<WriteOp> decode_write_op(ByteReader& r) {
  WriteOp op;
  uint8_t kind = r.get_u8();
  if (kind < 1 || kind > 4) return std::nullopt;
  op.kind = static_cast<OpKind>(kind);
  op.key = r.get_string();
  uint32_t n = r.get_u32();
  if (!r.ok() || n > r.remaining()) return std::nullopt;
  op.columns.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    ColumnWrite c;
    c.column = r.get_string();
    if (r.get_u8() != 0) c.value = r.get_string();
    c.expected_version = r.get_u64();
    c.version = r.get_u64();
    op.columns.push_back(std::move(c));
  }
  if (!r.ok()) return std::nullopt;
  return op;
}

}  // namespace spinnaker
