#pragma once

#include <array>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "bapusim/access_point.hpp"
#include "bapusim/engine.hpp"
#include "bapusim/framing.hpp"
#include "bapusim/metrics.hpp"
#include "bapusim/packet.hpp"

namespace bapusim {

enum class Mode : uint8_t { Basic, Buffering, Proactive };

struct GatewayConfig {
  Mode mode = Mode::Basic;
  Strategy strategy = Strategy::FcfsCapacity;
  int n_aps = 1;
  // Reports carry a sequence number but no length; like the evaluation
  // workload, the stream uses fixed-size segments and the controller is
  // told the size.
  int64_t segment_payload = 1350;
  Rate uplink_rate = 2'000'000;  // for report-delay bounds in the loss probe
  size_t reorder_cap_segments = 256;
  // Loss probe window = probe_gain x smoothed cursor-advance interval
  // + probe_min; must outlast report jitter yet undercut the sender RTO.
  // Repeat fires without cursor progress back off exponentially.
  SimTime probe_min = msec(10);
  SimTime probe_max = msec(500);
  int probe_gain = 2;
  bool reschedule_on_nack = true;
  // Reports in flight consume queue bytes the capacity model cannot see;
  // leave this much headroom when charging an AP with a data message.
  int64_t capacity_margin_bytes = 4096;
  // Schedule attempts before a packet is given up on. Never applied to
  // proactive TCP sessions: once a byte range is spoofed-acked the sender
  // will not retransmit it, so the gateway must keep retrying the holders.
  int max_schedule_attempts = 16;
  uint32_t nat_public_ip = 0xCB007101;  // 203.0.113.1
  uint16_t nat_port_base = 40000;
  // Injected packets this long in the past may see their 16-bit ipid reused;
  // their table entries are retired.
  SimTime ipid_recycle_guard = sec(2);
};

// The centralized controller: collects reception reports, picks forwarders
// first-come-first-served among reporters with spare capacity, tracks the
// contiguously reported TCP range, spoofs cumulative ACKs toward the sender
// (proactive mode), optionally re-orders at the gateway (buffering mode),
// and injects decapsulated packets toward the destination.
class Gateway {
 public:
  struct Hooks {
    std::function<void(int, TunnelMessage&&)> send_tunnel_down;  // per AP index
    std::function<void(Packet&&)> inject_to_dest;
    std::function<void(Packet&&)> send_to_sender;  // default downlink path
  };

  Gateway(Engine& eng, NodeId node, GatewayConfig cfg, Hooks hooks, Metrics* metrics);

  void on_tunnel(int ap_index, TunnelMessage&& msg);
  // Raw packet on the default uplink path (handshake / first datagram):
  // installs the NAT mapping, then forwards.
  void on_default_uplink(Packet&& pkt);
  // Traffic from the destination toward the sender.
  void on_reverse(Packet&& pkt);

  // Visible for tests.
  uint64_t contiguity_cursor(const SessionKey& key) const;
  uint64_t last_spoofed_ack(const SessionKey& key) const;
  int64_t outstanding_bytes(const SessionKey& key, int ap_index) const;

 private:
  struct Reporter {
    int ap_index;
    uint32_t capacity;
  };
  enum class IpidState : uint8_t { Pending, Scheduled, Injected, Abandoned };
  struct IpidEntry {
    IpidState state = IpidState::Pending;
    uint32_t tcp_seq = 0;
    int64_t data_wire = 0;
    std::vector<Reporter> reporters;
    int scheduled_ap = -1;
    uint32_t tried_mask = 0;
    int attempts = 0;
    bool release_broadcast = false;
    SimTime injected_at = 0;
  };
  struct Session {
    SessionKey key;
    uint64_t hash = 0;
    bool nat_installed = false;
    NatRecord nat;
    std::vector<uint16_t> apid_of_ap;
    std::vector<bool> registered;
    std::vector<int> awaiting_reply;
    uint16_t next_apid = 1;
    std::map<uint16_t, IpidEntry> table;
    std::deque<std::pair<SimTime, uint16_t>> retire_queue;
    std::vector<std::deque<uint16_t>> pending_by_ap;
    std::vector<int64_t> outstanding;
    std::vector<int64_t> last_capacity;
    // Contiguously reported TCP stream state.
    std::map<uint64_t, uint64_t> reported;
    uint64_t cursor = 0;
    uint64_t highest_reported = 0;
    uint64_t last_spoofed = 0;
    int64_t observed_adv_window = 0;
    SimTime advance_gap_smoothed = -1;
    SimTime advance_gap_var = msec(25);  // conservative until measured
    SimTime last_advance = 0;
    EventHandle probe_timer;
    int probe_backoff = 0;
    // Buffering-mode reorder state.
    std::map<uint64_t, Packet> reorder;
    uint64_t expected_seq = 0;
    uint16_t nat_index = 0;
  };

  Session& session_for_hash(uint64_t hash);
  Session& session_for_key(const SessionKey& key);
  void on_register(Session& s, int ap_index);
  void reply_pending_registrations(Session& s);
  void on_report(Session& s, int ap_index, const TunnelMessage& msg);
  void on_data(Session& s, int ap_index, TunnelMessage&& msg);
  void on_nack(Session& s, int ap_index, const TunnelMessage& msg);
  bool try_schedule(Session& s, uint16_t ipid, IpidEntry& e);
  void schedule_to(Session& s, uint16_t ipid, IpidEntry& e, int ap_index);
  void broadcast(Session& s, const TunnelMessage& msg);
  void drain_pending(Session& s, int ap_index);
  int64_t effective_capacity(const Session& s, int ap_index) const;
  void advance_cursor(Session& s, uint64_t seq, uint32_t len);
  void send_spoofed_ack(Session& s);
  void arm_probe(Session& s);
  void on_probe(uint64_t hash);
  void inject(Session& s, Packet&& pkt);
  void inject_in_order(Session& s, Packet&& pkt);
  void gc_table(Session& s);

  Engine& eng_;
  NodeId node_;
  GatewayConfig cfg_;
  Hooks hooks_;
  Metrics* metrics_;
  std::map<uint64_t, Session> sessions_;
  std::map<SessionKey, uint64_t> hash_of_key_;
  uint16_t next_nat_index_ = 0;
};

}  // namespace bapusim
