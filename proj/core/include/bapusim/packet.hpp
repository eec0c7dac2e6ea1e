#pragma once

#include <compare>
#include <cstdint>

#include "bapusim/units.hpp"

namespace bapusim {

enum class Proto : uint8_t { Udp = 0, Tcp = 1 };

// A transport session is identified across overlapping WLANs by six fields:
// two senders in different WLANs may legally share the same IP 5-tuple, so
// the WLAN id (BSSID) disambiguates.
struct SessionKey {
  uint32_t bssid = 0;
  Proto proto = Proto::Udp;
  uint32_t src_ip = 0;
  uint32_t dst_ip = 0;
  uint16_t src_port = 0;
  uint16_t dst_port = 0;

  friend auto operator<=>(const SessionKey&, const SessionKey&) = default;
};

// FNV-1a over the canonical little-endian encoding of the six fields.
uint64_t session_hash(const SessionKey& k);

// One simulated IP packet. `uid` is a run-unique counter used only for
// accounting (duplicate detection in metrics, exactly-once audits); protocol
// logic sees the wrapping 16-bit ipid like the real system does.
struct Packet {
  uint64_t uid = 0;
  SessionKey session;
  uint16_t ipid = 0;
  uint64_t seq = 0;         // tcp: stream offset of first payload byte; udp: datagram index
  uint32_t payload_len = 0; // application bytes
  uint64_t ack = 0;         // tcp reverse direction: cumulative ack
  int64_t adv_window = 0;   // tcp reverse direction: advertised window
  bool syn = false;
  bool reverse = false;     // travels D -> S
  bool spoofed = false;     // originated at the gateway, not at D
  bool first_of_session = false;
  // Header addresses as they appear on the wire; rewritten by NAT.
  uint32_t hdr_src_ip = 0;
  uint16_t hdr_src_port = 0;

  bool is_pure_ack() const { return payload_len == 0 && !syn; }
};

// Header byte counts used for wire accounting. TCP carries timestamps.
constexpr int64_t kIpHeader = 20;
constexpr int64_t kUdpHeader = 8;
constexpr int64_t kTcpHeader = 32;

// Size of the packet as an IP datagram (payload + IP + transport headers).
constexpr int64_t ip_packet_bytes(Proto proto, int64_t payload_len) {
  return payload_len + kIpHeader + (proto == Proto::Udp ? kUdpHeader : kTcpHeader);
}
inline int64_t ip_packet_bytes(const Packet& p) {
  return ip_packet_bytes(p.session.proto, p.payload_len);
}

// Per-packet framing added on the default (untunneled) uplink path,
// calibrated so a saturated 2 Mbps link reproduces the single-path goodput
// ceilings (UDP 1.94 Mbps, TCP 1.90 Mbps at 1350-byte payloads).
constexpr int64_t kDefaultPathFraming = 14;

inline int64_t default_path_wire_bytes(const Packet& p) {
  return ip_packet_bytes(p) + kDefaultPathFraming;
}

// Goodput ceiling of one shaped uplink: rate x payload / (payload +
// overhead). The four per-protocol overhead constants are integer-byte
// solutions of the published ceilings for 2 Mbps links and 1350-byte
// payloads (UDP 1.94, TCP 1.90, aggregated UDP 1.82, aggregated TCP 1.80
// Mbps).
constexpr int64_t kCeilingOverheadUdp = 42;
constexpr int64_t kCeilingOverheadTcp = 71;
constexpr int64_t kCeilingOverheadAggUdp = 134;
constexpr int64_t kCeilingOverheadAggTcp = 150;

double theoretical_max_bps(Proto proto, bool aggregated, Rate uplink_rate,
                           int64_t payload_size);

// A frame on the air. MAC-layer retransmissions of one packet share the
// ipid; only the retry index differs.
struct WifiFrame {
  uint32_t bssid = 0;
  NodeId next_hop = -1;
  uint16_t ipid = 0;
  Packet inner;
  int mac_retry_index = 0;  // 0..12
};

}  // namespace bapusim
