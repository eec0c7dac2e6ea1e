#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "bapusim/framing.hpp"
#include "bapusim/metrics.hpp"
#include "bapusim/packet.hpp"
#include "bapusim/rng.hpp"
#include "bapusim/units.hpp"

namespace bapusim {

enum class ApRole : uint8_t { Home, Monitor };

enum class Strategy : uint8_t { FcfsCapacity, Modulo, ModuloRedundant };

struct ApConfig {
  int index = 0;  // 0 is always the home AP
  int n_aps = 1;
  ApRole role = ApRole::Home;
  size_t buffer_cap = 256;
  size_t dedup_window = 32768;  // recent-IPID window; tolerates 16-bit wrap
  SimTime retention_ttl = msec(250);
  Strategy strategy = Strategy::FcfsCapacity;
  double p_extra = 0.0;            // modulo+redundancy forward probability
  double fault_evict_prob = 0.0;   // test harness: lose a scheduled packet
  std::vector<uint16_t> bapu_ports{5000};
};

// Per-AP protocol logic, same code for both roles. Frames come in from the
// wireless side, schedules and the registration reply from the gateway
// tunnel. State transitions are driven by the owner through hooks so the
// class stays independent of the event engine.
class AccessPoint {
 public:
  struct Hooks {
    // Control/data onto the uplink tunnel; returns false if a data message
    // was dropped on queue overflow.
    std::function<bool(TunnelMessage&&)> send_tunnel;
    // Raw packet up the default (untunneled) path. Home AP only.
    std::function<void(Packet&&)> send_default_uplink;
    // Reverse-path packet out the wireless interface toward the sender.
    std::function<void(const Packet&)> deliver_to_sender;
    // Free bytes in the tunnel send queue, reported as spare capacity.
    std::function<int64_t()> tunnel_free_bytes;
  };

  AccessPoint(ApConfig cfg, Hooks hooks, RngStream rng, Metrics* metrics);

  // Session identification from an overheard frame: the 6-tuple plus
  // whether the destination port marks an aggregation session.
  static std::pair<SessionKey, bool> identify_session(
      const WifiFrame& frame, std::span<const uint16_t> bapu_ports);

  void on_frame(SimTime now, const WifiFrame& frame);
  void on_tunnel(SimTime now, TunnelMessage&& msg);
  void on_reverse_packet(SimTime now, Packet&& pkt);

  // Visible for tests.
  size_t buffered_packets() const;
  bool session_registered(const SessionKey& key) const;

 private:
  struct Session {
    SessionKey key;
    uint64_t hash = 0;
    uint16_t apid = 0;
    bool registered = false;
    std::optional<NatRecord> nat;
    std::map<uint16_t, Packet> buffer;  // unscheduled packets by ipid
    std::vector<bool> seen = std::vector<bool>(65536, false);
    std::deque<uint16_t> seen_order;
    // Released on a schedule naming another AP, kept briefly so the
    // gateway can redirect here if the chosen forwarder lost the packet.
    std::map<uint16_t, std::pair<Packet, SimTime>> retention;
    std::deque<TunnelMessage> pending_reports;  // queued behind registration
  };

  Session& session_for(SimTime now, const SessionKey& key);
  bool remember_ipid(Session& s, uint16_t ipid);  // false when duplicate
  void buffer_and_report(SimTime now, Session& s, const Packet& pkt);
  void make_report(Session& s, const Packet& pkt);
  void handle_schedule(SimTime now, Session& s, const TunnelMessage& msg);
  void forward_packet(Session& s, Packet pkt);
  void send_nack(Session& s, uint16_t ipid);
  void modulo_forward(Session& s, const Packet& pkt);
  void sweep_retention(SimTime now, Session& s);

  ApConfig cfg_;
  Hooks hooks_;
  RngStream rng_;
  Metrics* metrics_;
  std::map<SessionKey, Session> sessions_;
  std::map<uint64_t, SessionKey> by_hash_;
};

}  // namespace bapusim
