#include "bapusim/wireless.hpp"

#include <algorithm>

namespace bapusim {

void WirelessChannel::set_home(NodeId node, RngStream rng, DeliverFn deliver) {
  home_node_ = node;
  home_rng_ = rng;
  home_deliver_ = std::move(deliver);
}

void WirelessChannel::add_monitor(NodeId node, double loss_p, RngStream rng,
                                  DeliverFn deliver) {
  monitors_.push_back(Monitor{node, loss_p, rng, std::move(deliver), 0});
}

void WirelessChannel::set_sender(NodeId node, RngStream rng, DeliverFn deliver) {
  sender_node_ = node;
  down_rng_ = rng;
  sender_deliver_ = std::move(deliver);
}

void WirelessChannel::transmit_uplink(const Packet& packet, uint32_t bssid) {
  int64_t frame_bytes = ip_packet_bytes(packet) + cfg_.frame_overhead;
  SimTime attempt_time = serialization_us(frame_bytes, cfg_.wifi_rate);
  SimTime start = std::max(eng_.now(), up_busy_until_);

  ++stats_.packets;
  bool home_got_it = false;
  int attempts = 0;
  for (int a = 1; a <= cfg_.max_attempts && !home_got_it; ++a) {
    attempts = a;
    home_got_it = home_rng_.bernoulli(1.0 - cfg_.per_unicast_loss);
    SimTime attempt_end = start + a * attempt_time;
    // Monitors overhear every attempt independently, including the one the
    // home AP finally receives; duplicates are someone else's problem.
    for (auto& mon : monitors_) {
      if (mon.rng.bernoulli(1.0 - mon.loss_p)) {
        ++mon.overheard;
        WifiFrame frame{bssid, home_node_, packet.ipid, packet, a - 1};
        eng_.schedule(attempt_end + cfg_.propagation_delay, mon.node,
                      EventKind::FrameArrival,
                      [deliver = &mon.deliver, frame] { (*deliver)(frame); });
      }
    }
    if (home_got_it) {
      WifiFrame frame{bssid, home_node_, packet.ipid, packet, a - 1};
      eng_.schedule(attempt_end + cfg_.propagation_delay, home_node_,
                    EventKind::FrameArrival,
                    [this, frame] { home_deliver_(frame); });
      stats_.delivered_payload_bytes += packet.payload_len;
    }
  }
  if (!home_got_it) ++stats_.mac_failures;
  stats_.attempts += attempts;
  up_busy_until_ = start + attempts * attempt_time;
  stats_.busy_time += attempts * attempt_time;
}

void WirelessChannel::transmit_downlink(const Packet& packet, uint32_t bssid) {
  int64_t frame_bytes = ip_packet_bytes(packet) + cfg_.frame_overhead;
  SimTime attempt_time = serialization_us(frame_bytes, cfg_.wifi_rate);
  SimTime start = std::max(eng_.now(), down_busy_until_);

  bool delivered = false;
  int attempts = 0;
  for (int a = 1; a <= cfg_.max_attempts && !delivered; ++a) {
    attempts = a;
    delivered = down_rng_.bernoulli(1.0 - cfg_.per_unicast_loss);
    if (delivered) {
      WifiFrame frame{bssid, sender_node_, packet.ipid, packet, a - 1};
      eng_.schedule(start + a * attempt_time + cfg_.propagation_delay, sender_node_,
                    EventKind::FrameArrival,
                    [this, frame] { sender_deliver_(frame); });
    }
  }
  down_busy_until_ = start + attempts * attempt_time;
}

}  // namespace bapusim
