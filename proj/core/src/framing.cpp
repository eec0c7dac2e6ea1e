#include "bapusim/framing.hpp"

namespace bapusim {

namespace {

// Serialized field block of an encapsulated packet inside a data message.
// The block is padded with zeros up to the original datagram size so the
// framed length matches what the real encapsulation would carry.
constexpr int64_t kPacketBlockBytes = 62;

void put_le(std::vector<uint8_t>& out, uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint64_t get_le(std::span<const uint8_t> in, size_t& pos, int bytes) {
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<uint64_t>(in[pos + i]) << (8 * i);
  pos += bytes;
  return v;
}

void put_packet_block(std::vector<uint8_t>& out, const Packet& p) {
  put_le(out, p.uid, 8);
  put_le(out, static_cast<uint64_t>(p.session.proto), 1);
  put_le(out, p.session.bssid, 4);
  put_le(out, p.session.src_ip, 4);
  put_le(out, p.session.dst_ip, 4);
  put_le(out, p.session.src_port, 2);
  put_le(out, p.session.dst_port, 2);
  put_le(out, p.ipid, 2);
  put_le(out, p.seq, 8);
  put_le(out, p.payload_len, 4);
  put_le(out, p.ack, 8);
  put_le(out, static_cast<uint64_t>(p.adv_window), 8);
  uint8_t flags = (p.syn ? 1 : 0) | (p.reverse ? 2 : 0) | (p.spoofed ? 4 : 0) |
                  (p.first_of_session ? 8 : 0);
  put_le(out, flags, 1);
  put_le(out, p.hdr_src_ip, 4);
  put_le(out, p.hdr_src_port, 2);
}

Packet get_packet_block(std::span<const uint8_t> in, size_t& pos) {
  Packet p;
  p.uid = get_le(in, pos, 8);
  p.session.proto = static_cast<Proto>(get_le(in, pos, 1));
  p.session.bssid = static_cast<uint32_t>(get_le(in, pos, 4));
  p.session.src_ip = static_cast<uint32_t>(get_le(in, pos, 4));
  p.session.dst_ip = static_cast<uint32_t>(get_le(in, pos, 4));
  p.session.src_port = static_cast<uint16_t>(get_le(in, pos, 2));
  p.session.dst_port = static_cast<uint16_t>(get_le(in, pos, 2));
  p.ipid = static_cast<uint16_t>(get_le(in, pos, 2));
  p.seq = get_le(in, pos, 8);
  p.payload_len = static_cast<uint32_t>(get_le(in, pos, 4));
  p.ack = get_le(in, pos, 8);
  p.adv_window = static_cast<int64_t>(get_le(in, pos, 8));
  uint8_t flags = static_cast<uint8_t>(get_le(in, pos, 1));
  p.syn = flags & 1;
  p.reverse = flags & 2;
  p.spoofed = flags & 4;
  p.first_of_session = flags & 8;
  p.hdr_src_ip = static_cast<uint32_t>(get_le(in, pos, 4));
  p.hdr_src_port = static_cast<uint16_t>(get_le(in, pos, 2));
  return p;
}

}  // namespace

uint16_t TunnelMessage::payload_len() const {
  switch (type) {
    case MsgType::Data:
      if (!inner) throw FramingError("data message without encapsulated packet");
      return static_cast<uint16_t>(ip_packet_bytes(*inner));
    case MsgType::Register:
      return nat ? 6 : 0;
    default:
      return 0;
  }
}

std::vector<uint8_t> encode(const TunnelMessage& msg) {
  uint16_t plen = msg.payload_len();
  if (msg.type == MsgType::Data && plen < kPacketBlockBytes) {
    throw FramingError("encapsulated packet too small for field block");
  }
  std::vector<uint8_t> out;
  out.reserve(kFrameHeaderBytes + plen);
  put_le(out, static_cast<uint64_t>(msg.type), 1);
  put_le(out, msg.apid, 2);
  put_le(out, msg.session_hash, 8);
  put_le(out, msg.ipid, 2);
  put_le(out, msg.tcp_seq, 4);
  put_le(out, msg.capacity, 4);
  put_le(out, plen, 2);
  if (msg.type == MsgType::Data) {
    put_packet_block(out, *msg.inner);
    out.resize(kFrameHeaderBytes + plen, 0);
  } else if (msg.type == MsgType::Register && msg.nat) {
    put_le(out, msg.nat->public_ip, 4);
    put_le(out, msg.nat->public_port, 2);
  }
  return out;
}

TunnelMessage decode(std::span<const uint8_t> bytes) {
  if (bytes.size() < static_cast<size_t>(kFrameHeaderBytes)) {
    throw FramingError("short frame");
  }
  size_t pos = 0;
  TunnelMessage msg;
  uint64_t type = get_le(bytes, pos, 1);
  if (type > static_cast<uint64_t>(MsgType::Nack)) throw FramingError("unknown msg_type");
  msg.type = static_cast<MsgType>(type);
  msg.apid = static_cast<uint16_t>(get_le(bytes, pos, 2));
  msg.session_hash = get_le(bytes, pos, 8);
  msg.ipid = static_cast<uint16_t>(get_le(bytes, pos, 2));
  msg.tcp_seq = static_cast<uint32_t>(get_le(bytes, pos, 4));
  msg.capacity = static_cast<uint32_t>(get_le(bytes, pos, 4));
  uint64_t plen = get_le(bytes, pos, 2);
  if (bytes.size() != kFrameHeaderBytes + plen) throw FramingError("length mismatch");
  if (msg.type == MsgType::Data) {
    if (plen < kPacketBlockBytes) throw FramingError("data payload too small");
    msg.inner = get_packet_block(bytes, pos);
    if (static_cast<int64_t>(plen) != ip_packet_bytes(*msg.inner)) {
      throw FramingError("payload length disagrees with encapsulated packet");
    }
  } else if (msg.type == MsgType::Register && plen == 6) {
    NatRecord nat;
    nat.public_ip = static_cast<uint32_t>(get_le(bytes, pos, 4));
    nat.public_port = static_cast<uint16_t>(get_le(bytes, pos, 2));
    msg.nat = nat;
  } else if (plen != 0) {
    throw FramingError("unexpected payload");
  }
  return msg;
}

}  // namespace bapusim
