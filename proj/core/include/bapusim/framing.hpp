#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bapusim/packet.hpp"

namespace bapusim {

// Control and data messages exchanged on AP<->gateway tunnels use a fixed
// little-endian framing:
//
//   offset  size  field
//   0       1     msg_type   (0=register, 1=report, 2=schedule, 3=data, 4=nack)
//   1       2     apid
//   3       8     session_hash
//   11      2     ipid
//   13      4     tcp_seq
//   17      4     capacity
//   21      2     payload_len
//   23      ...   payload
//
// Data messages carry the encapsulated sender packet as payload (padded to
// the original IP datagram size); register replies carry the 6-byte NAT
// record; everything else has an empty payload.
enum class MsgType : uint8_t {
  Register = 0,
  Report = 1,
  Schedule = 2,
  Data = 3,
  Nack = 4,
};

constexpr int64_t kFrameHeaderBytes = 23;

// Tunnel TCP/IP + link framing charged per data message. Control messages
// coalesce into the tunnel stream and are charged header size only. The
// constant is calibrated so a saturated 2 Mbps uplink carrying one report
// plus one data message per 1350-byte payload reproduces the 1.82 Mbps
// aggregated-UDP goodput ceiling.
constexpr int64_t kDataMsgFraming = 60;

struct NatRecord {
  uint32_t public_ip = 0;
  uint16_t public_port = 0;
  friend bool operator==(const NatRecord&, const NatRecord&) = default;
};

struct TunnelMessage {
  MsgType type = MsgType::Report;
  uint16_t apid = 0;
  uint64_t session_hash = 0;
  uint16_t ipid = 0;
  uint32_t tcp_seq = 0;
  uint32_t capacity = 0;
  std::optional<Packet> inner;   // Data
  std::optional<NatRecord> nat;  // Register reply

  uint16_t payload_len() const;
  // Bytes charged against the carrying link.
  int64_t wire_bytes() const {
    return kFrameHeaderBytes + payload_len() +
           (type == MsgType::Data ? kDataMsgFraming : 0);
  }
};

class FramingError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<uint8_t> encode(const TunnelMessage& msg);
TunnelMessage decode(std::span<const uint8_t> bytes);

}  // namespace bapusim
