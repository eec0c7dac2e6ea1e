#include "bapusim/packet.hpp"

namespace bapusim {

namespace {
constexpr uint64_t kFnvOffset = 14695981039346656037ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

void fnv_le(uint64_t& h, uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= kFnvPrime;
  }
}
}  // namespace

uint64_t session_hash(const SessionKey& k) {
  uint64_t h = kFnvOffset;
  fnv_le(h, k.bssid, 4);
  fnv_le(h, static_cast<uint64_t>(k.proto), 1);
  fnv_le(h, k.src_ip, 4);
  fnv_le(h, k.dst_ip, 4);
  fnv_le(h, k.src_port, 2);
  fnv_le(h, k.dst_port, 2);
  return h;
}

double theoretical_max_bps(Proto proto, bool aggregated, Rate uplink_rate,
                           int64_t payload_size) {
  int64_t overhead;
  if (aggregated) {
    overhead = proto == Proto::Udp ? kCeilingOverheadAggUdp : kCeilingOverheadAggTcp;
  } else {
    overhead = proto == Proto::Udp ? kCeilingOverheadUdp : kCeilingOverheadTcp;
  }
  return static_cast<double>(uplink_rate) * static_cast<double>(payload_size) /
         static_cast<double>(payload_size + overhead);
}

}  // namespace bapusim
