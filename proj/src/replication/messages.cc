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

#include "spinnaker/replication/messages.h"

namespace spinnaker {

namespace {

void put_lsn(ByteWriter& w, Lsn l) { w.put_u64(l.encode()); }
Lsn get_lsn(ByteReader& r) { return Lsn::decode(r.get_u64()); }

void put_writes(ByteWriter& w, const std::vector<LoggedWrite>& writes) {
  w.put_u32(static_cast<uint32_t>(writes.size()));
  for (const auto& lw : writes) {
    put_lsn(w, lw.lsn);
    encode_write_op(w, lw.op);
  }
}

bool get_writes(ByteReader& r, std::vector<LoggedWrite>& out) {
  const uint32_t n = r.get_u32();
  if (!r.ok() || n > r.remaining()) return false;
  for (uint32_t i = 0; i < n; ++i) {
    const Lsn l = get_lsn(r);
    auto op = decode_write_op(r);
    if (!op) return false;
    out.push_back(LoggedWrite{std::move(*op), l});
  }
  return r.ok();
}

void put_lsns(ByteWriter& w, const std::vector<Lsn>& lsns) {
  w.put_u32(static_cast<uint32_t>(lsns.size()));
  for (const auto& l : lsns) put_lsn(w, l);
}

bool get_lsns(ByteReader& r, std::vector<Lsn>& out) {
  const uint32_t n = r.get_u32();
  if (!r.ok() || n > r.remaining() / 8) return false;
  for (uint32_t i = 0; i < n; ++i) out.push_back(get_lsn(r));
  return r.ok();
}

void put_columns(ByteWriter& w, const std::vector<ColumnWrite>& cols) {
  w.put_u32(static_cast<uint32_t>(cols.size()));
  for (const auto& c : cols) {
    w.put_string(c.column);
    w.put_u8(c.value ? 1 : 0);
    if (c.value) w.put_string(*c.value);
    w.put_u64(c.expected_version);
    w.put_u64(c.version);
  }
}

bool get_columns(ByteReader& r, std::vector<ColumnWrite>& out) {
  const uint32_t n = r.get_u32();
  if (!r.ok() || n > r.remaining()) return false;
  for (uint32_t i = 0; i < n; ++i) {
    ColumnWrite c;
    c.column = r.get_string();
    if (r.get_u8()) c.value = r.get_string();
    c.expected_version = r.get_u64();
    c.version = r.get_u64();
    out.push_back(std::move(c));
  }
  return r.ok();
}

struct BodyEncoder {
  ByteWriter& w;
  void operator()(const ProposeMsg& m) {
    encode_record(w, m.record);
    put_lsn(w, m.committed);
  }
  void operator()(const AckMsg& m) { put_lsn(w, m.lsn); }
  void operator()(const CommitMsg& m) { put_lsn(w, m.up_to); }
  void operator()(const CatchUpRequestMsg& m) {
    put_lsn(w, m.committed);
    put_lsn(w, m.last);
  }
  void operator()(const SyncBatchMsg& m) {
    put_lsn(w, m.from);
    put_lsn(w, m.through);
    put_writes(w, m.writes);
    put_lsns(w, m.lsns);
    put_writes(w, m.pending);
    put_lsns(w, m.pending_lsns);
  }
  void operator()(const CatchUpAckMsg& m) { put_lsn(w, m.through); }
  void operator()(const SyncAckMsg& m) { put_lsn(w, m.last); }
  void operator()(const ClientRequestMsg& m) {
    w.put_u64(m.request_id);
    w.put_u8(static_cast<uint8_t>(m.op));
    w.put_u8(m.consistent ? 1 : 0);
    w.put_string(m.key);
    put_columns(w, m.columns);
  }
  void operator()(const ClientResponseMsg& m) {
    w.put_u64(m.request_id);
    w.put_u8(static_cast<uint8_t>(m.code));
    w.put_string(m.detail);
    w.put_u32(static_cast<uint32_t>(m.values.size()));
    for (const auto& v : m.values) {
      w.put_u8(v ? 1 : 0);
      if (v) w.put_string(*v);
    }
    w.put_u32(static_cast<uint32_t>(m.versions.size()));
    for (uint64_t v : m.versions) w.put_u64(v);
  }
};

std::optional<MessageBody> decode_body(MsgType type, ByteReader& r) {
  switch (type) {
    case MsgType::kPropose: {
      auto rec = decode_record(r);
      if (!rec) return std::nullopt;
      ProposeMsg m{std::move(*rec), get_lsn(r)};
      return m;
    }
    case MsgType::kAck:
      return AckMsg{get_lsn(r)};
    case MsgType::kCommit:
    case MsgType::kTakeoverCommit:
      return CommitMsg{get_lsn(r)};
    case MsgType::kCatchUpRequest: {
      CatchUpRequestMsg m;
      m.committed = get_lsn(r);
      m.last = get_lsn(r);
      return m;
    }
    case MsgType::kCatchUpData:
    case MsgType::kCatchUpDone:
    case MsgType::kRePropose: {
      SyncBatchMsg m;
      m.from = get_lsn(r);
      m.through = get_lsn(r);
      if (!get_writes(r, m.writes) || !get_lsns(r, m.lsns) || !get_writes(r, m.pending) ||
          !get_lsns(r, m.pending_lsns)) {
        return std::nullopt;
      }
      return m;
    }
    case MsgType::kCatchUpAck:
      return CatchUpAckMsg{get_lsn(r)};
    case MsgType::kSyncAck:
      return SyncAckMsg{get_lsn(r)};
    case MsgType::kClientRequest: {
      ClientRequestMsg m;
      m.request_id = r.get_u64();
      const uint8_t op = r.get_u8();
      if (op < 1 || op > 5) return std::nullopt;
      m.op = static_cast<ClientOp>(op);
      m.consistent = r.get_u8() != 0;
      m.key = r.get_string();
      if (!get_columns(r, m.columns)) return std::nullopt;
      return m;
    }
    case MsgType::kClientResponse: {
      ClientResponseMsg m;
      m.request_id = r.get_u64();
      m.code = static_cast<Code>(r.get_u8());
      m.detail = r.get_string();
      const uint32_t nv = r.get_u32();
      if (!r.ok() || nv > r.remaining()) return std::nullopt;
      for (uint32_t i = 0; i < nv; ++i) {
        if (r.get_u8()) {
          m.values.emplace_back(r.get_string());
        } else {
          m.values.emplace_back(std::nullopt);
        }
      }
      const uint32_t nver = r.get_u32();
      if (!r.ok() || nver > r.remaining() / 8) return std::nullopt;
      for (uint32_t i = 0; i < nver; ++i) m.versions.push_back(r.get_u64());
      return m;
    }
  }
  return std::nullopt;
}

}  // namespace

const char* msg_type_name(MsgType t) {
  switch (t) {
    case MsgType::kPropose: return "propose";
    case MsgType::kAck: return "ack";
    case MsgType::kCommit: return "commit";
    case MsgType::kCatchUpRequest: return "catchup_request";
    case MsgType::kCatchUpData: return "catchup_data";
    case MsgType::kCatchUpAck: return "catchup_ack";
    case MsgType::kCatchUpDone: return "catchup_done";
    case MsgType::kTakeoverCommit: return "takeover_commit";
    case MsgType::kRePropose: return "repropose";
    case MsgType::kSyncAck: return "sync_ack";
    case MsgType::kClientRequest: return "client_request";
    case MsgType::kClientResponse: return "client_response";
  }
  return "?";
}

const char* client_op_name(ClientOp op) {
  switch (op) {
    case ClientOp::kGet: return "get";
    case ClientOp::kPut: return "put";
    case ClientOp::kDelete: return "delete";
    case ClientOp::kConditionalPut: return "conditionalPut";
    case ClientOp::kConditionalDelete: return "conditionalDelete";
  }
  return "?";
}

Bytes encode_message(const Message& m) {
  ByteWriter w;
  w.put_u8(kProtocolVersion);
  w.put_u8(static_cast<uint8_t>(m.type));
  w.put_u32(m.cohort);
  w.put_u16(static_cast<uint16_t>(m.epoch));
  const size_t len_at = w.size();
  w.put_u32(0);
  std::visit(BodyEncoder{w}, m.body);
  w.patch_u32(len_at, static_cast<uint32_t>(w.size() - kMessageHeaderBytes));
  return w.take();
}

Result<Message> decode_message(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.get_u8() != kProtocolVersion) return make_error(Code::kParseError, "bad protocol version");
  const uint8_t type = r.get_u8();
  Message m;
  m.cohort = r.get_u32();
  m.epoch = r.get_u16();
  const uint32_t len = r.get_u32();
  if (!r.ok() || len != r.remaining()) return make_error(Code::kParseError, "bad message length");
  if (type < 1 || type > static_cast<uint8_t>(MsgType::kClientResponse)) {
    return make_error(Code::kParseError, "bad message type");
  }
  m.type = static_cast<MsgType>(type);
  auto body = decode_body(m.type, r);
  if (!body || !r.done()) return make_error(Code::kParseError, std::string("bad ") + msg_type_name(m.type));
  m.body = std::move(*body);
  return m;
}

}  // namespace spinnaker
