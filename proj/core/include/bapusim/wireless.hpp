#pragma once

#include <functional>
#include <vector>

#include "bapusim/engine.hpp"
#include "bapusim/packet.hpp"
#include "bapusim/rng.hpp"

namespace bapusim {

struct ChannelConfig {
  Rate wifi_rate = 54'000'000;
  double per_unicast_loss = 0.05;  // per attempt, sender -> home AP
  SimTime propagation_delay = usec(3);
  int64_t frame_overhead = 36;  // 802.11 + LLC bytes around the IP datagram
  int max_attempts = 13;        // 1 transmission + up to 12 MAC retries
};

struct ChannelStats {
  uint64_t packets = 0;
  uint64_t attempts = 0;
  uint64_t mac_failures = 0;   // all attempts lost, packet never reached home AP
  SimTime busy_time = 0;       // uplink airtime
  int64_t delivered_payload_bytes = 0;  // payload bytes that reached the home AP
};

// The sender<->home-AP unicast link plus the monitor APs overhearing it.
// Every MAC attempt is an independent Bernoulli trial toward the home AP
// and toward each monitor; the unicast retries up to 12 times, which is why
// home reception dominates any monitor's. The channel is half-duplex from
// the sender's point of view: its frames serialize one after another.
class WirelessChannel {
 public:
  using DeliverFn = std::function<void(const WifiFrame&)>;

  WirelessChannel(Engine& eng, ChannelConfig cfg) : eng_(eng), cfg_(cfg) {}

  void set_home(NodeId node, RngStream rng, DeliverFn deliver);
  // `loss_p` is the per-attempt probability the monitor misses the frame.
  void add_monitor(NodeId node, double loss_p, RngStream rng, DeliverFn deliver);
  void set_sender(NodeId node, RngStream rng, DeliverFn deliver);

  // Unicast sender -> home AP; monitors overhear each attempt.
  void transmit_uplink(const Packet& packet, uint32_t bssid);
  // Unicast home AP -> sender (reverse path). No overhearing, same ARQ.
  void transmit_downlink(const Packet& packet, uint32_t bssid);

  const ChannelStats& stats() const { return stats_; }
  uint64_t overheard_count(size_t monitor_index) const {
    return monitors_[monitor_index].overheard;
  }

 private:
  struct Monitor {
    NodeId node;
    double loss_p;
    RngStream rng;
    DeliverFn deliver;
    uint64_t overheard = 0;
  };

  Engine& eng_;
  ChannelConfig cfg_;
  NodeId home_node_ = -1;
  RngStream home_rng_;
  DeliverFn home_deliver_;
  NodeId sender_node_ = -1;
  RngStream down_rng_;
  DeliverFn sender_deliver_;
  std::vector<Monitor> monitors_;
  SimTime up_busy_until_ = 0;
  SimTime down_busy_until_ = 0;
  ChannelStats stats_;
};

}  // namespace bapusim
