#include "bapusim/simulation.hpp"

#include <algorithm>

namespace bapusim {

namespace {
// Stable RNG stream ids per node role; adding APs never shifts the draws of
// existing nodes.
constexpr uint64_t kStreamWifiHome = 10;
constexpr uint64_t kStreamWifiDown = 11;
constexpr uint64_t kStreamMonitorBase = 100;
constexpr uint64_t kStreamApMiscBase = 200;
constexpr uint64_t kStreamRttBase = 300;

constexpr SimTime kDrainGrace = sec(3);
constexpr SimTime kSynRetry = sec(1);
}  // namespace

Simulation::Simulation(const Scenario& sc) : sc_(sc) {
  validate(sc_);
  metrics_.warmup_start = sc_.warmup();
  metrics_.window_end = sc_.duration();
  session_.bssid = 0xB55D0001;
  session_.proto = sc_.proto;
  session_.src_ip = 0xC0A80164;   // 192.168.1.100
  session_.dst_ip = 0xCB00710A;   // 203.0.113.10
  session_.src_port = 50000;
  session_.dst_port = sc_.bapu_port;
  if (sc_.shaper_study) {
    build_shaper_study();
  } else {
    build();
  }
}

Simulation::~Simulation() = default;

void Simulation::build() {
  ChannelConfig ch;
  ch.wifi_rate = sc_.wifi_rate;
  ch.per_unicast_loss = sc_.per_unicast_loss;
  channel_ = std::make_unique<WirelessChannel>(eng_, ch);

  int n = sc_.n_aps;
  for (int i = 0; i < n; ++i) {
    SimTime owd = sc_.one_way_delay();
    if (sc_.rtt_preset == RttPreset::Random2080) {
      RngStream r(sc_.seed, kStreamRttBase + i);
      owd = static_cast<SimTime>(r.uniform(10'000.0, 40'000.0));
    }
    TunnelConfig up_cfg{sc_.uplink_rate, owd, sc_.queue_cap_bytes};
    auto deliver_up = [this, i](LinkMessage&& m) { on_gw_uplink(i, std::move(m)); };
    if (sc_.tunnel_tcp) {
      up_.push_back(std::make_unique<TcpTunnel>(eng_, kGatewayNode, up_cfg,
                                                sc_.tunnel_path_queue_bytes, deliver_up));
    } else {
      up_.push_back(std::make_unique<IdealUplink>(eng_, kGatewayNode, up_cfg, deliver_up));
    }
    TunnelConfig down_cfg{sc_.downlink_rate, owd, 1 << 20};
    down_.push_back(std::make_unique<TunnelLink>(
        eng_, ap_node(i), down_cfg,
        [this, i](LinkMessage&& m) { on_ap_downlink(i, std::move(m)); }));
  }

  TunnelConfig lan{1'000'000'000, usec(500), 8 << 20};
  gw_to_dst_ = std::make_unique<TunnelLink>(
      eng_, kDestNode, lan,
      [this](LinkMessage&& m) { on_dest_packet(std::move(std::get<Packet>(m))); });
  dst_to_gw_ = std::make_unique<TunnelLink>(
      eng_, kGatewayNode, lan,
      [this](LinkMessage&& m) { gw_->on_reverse(std::move(std::get<Packet>(m))); });

  GatewayConfig gcfg;
  gcfg.mode = sc_.mode;
  gcfg.strategy = sc_.strategy;
  gcfg.n_aps = n;
  gcfg.segment_payload = sc_.payload_size;
  gcfg.uplink_rate = sc_.uplink_rate;
  gcfg.capacity_margin_bytes = sc_.sched_margin_bytes;
  gcfg.reorder_cap_segments = static_cast<size_t>(sc_.reorder_cap_segments);
  Gateway::Hooks ghooks;
  ghooks.send_tunnel_down = [this](int ap, TunnelMessage&& m) {
    down_[ap]->enqueue(std::move(m));
  };
  ghooks.inject_to_dest = [this](Packet&& p) { gw_to_dst_->enqueue(std::move(p)); };
  ghooks.send_to_sender = [this](Packet&& p) { down_[0]->enqueue(std::move(p)); };
  gw_ = std::make_unique<Gateway>(eng_, kGatewayNode, gcfg, ghooks, &metrics_);

  if (sc_.bapu) {
    for (int i = 0; i < n; ++i) {
      ApConfig acfg;
      acfg.index = i;
      acfg.n_aps = n;
      acfg.role = i == 0 ? ApRole::Home : ApRole::Monitor;
      acfg.buffer_cap = static_cast<size_t>(sc_.buffer_cap_packets);
      acfg.strategy = sc_.strategy;
      acfg.p_extra = sc_.p_extra;
      acfg.fault_evict_prob = sc_.fault_evict_prob;
      acfg.bapu_ports = {sc_.bapu_port};
      AccessPoint::Hooks ahooks;
      ahooks.send_tunnel = [this, i](TunnelMessage&& m) {
        return up_[i]->enqueue(std::move(m));
      };
      ahooks.send_default_uplink = [this](Packet&& p) { up_[0]->enqueue(std::move(p)); };
      ahooks.deliver_to_sender = [this](const Packet& p) {
        channel_->transmit_downlink(p, session_.bssid);
      };
      ahooks.tunnel_free_bytes = [this, i] { return up_[i]->free_capacity(); };
      aps_.push_back(std::make_unique<AccessPoint>(
          acfg, ahooks, RngStream(sc_.seed, kStreamApMiscBase + i), &metrics_));
    }
    channel_->set_home(ap_node(0), RngStream(sc_.seed, kStreamWifiHome),
                       [this](const WifiFrame& f) { aps_[0]->on_frame(eng_.now(), f); });
    for (int i = 1; i < n; ++i) {
      channel_->add_monitor(
          ap_node(i), sc_.monitor_loss, RngStream(sc_.seed, kStreamMonitorBase + i),
          [this, i](const WifiFrame& f) { aps_[i]->on_frame(eng_.now(), f); });
    }
  } else {
    // Plain single-path run: the home AP forwards everything on the default
    // route, no aggregation machinery.
    channel_->set_home(ap_node(0), RngStream(sc_.seed, kStreamWifiHome),
                       [this](const WifiFrame& f) { up_[0]->enqueue(Packet(f.inner)); });
  }
  channel_->set_sender(kSenderNode, RngStream(sc_.seed, kStreamWifiDown),
                       [this](const WifiFrame& f) { on_sender_frame(f); });

  if (sc_.proto == Proto::Tcp) {
    TcpSenderConfig scfg;
    scfg.mss = sc_.payload_size;
    scfg.initial_cwnd_segments = sc_.initial_cwnd_segments;
    scfg.initial_ssthresh_segments = sc_.initial_ssthresh_segments;
    scfg.fast_recovery_inflation = sc_.fast_recovery_inflation;
    scfg.adv_window = sc_.adv_window;
    tcp_sender_ = std::make_unique<TcpSender>(
        eng_, kSenderNode, scfg,
        [this](uint64_t seq, uint32_t len, bool retx) { send_tcp_segment(seq, len, retx); },
        [this](const TcpTraceRecord& r) {
          if (r.time <= sc_.duration()) metrics_.cwnd_trace.push_back(r);
        });
    TcpReceiverConfig rcfg;
    rcfg.delayed_ack = sc_.delayed_ack;
    rcfg.adv_window = sc_.adv_window;
    tcp_receiver_ = std::make_unique<TcpReceiver>(
        eng_, kDestNode, rcfg,
        [this](uint64_t ack, int64_t win, bool dup) { send_dest_ack(ack, win, dup); });
  } else {
    udp_rate_ = sc_.sender_rate;
    if (udp_rate_ == 0) {
      // Saturating source: offer slightly more than the aggregate can carry.
      double cap = theoretical_max_bps(Proto::Udp, sc_.bapu, sc_.uplink_rate,
                                       sc_.payload_size);
      udp_rate_ = static_cast<Rate>(1.05 * sc_.n_aps * cap);
    }
  }

  eng_.schedule(0, kSenderNode, EventKind::AppSend, [this] { start_session(); });
}

Packet Simulation::make_packet(uint64_t seq, uint32_t len, bool syn, bool first) {
  Packet p;
  p.uid = next_uid_++;
  p.session = session_;
  p.ipid = next_ipid_++;
  p.seq = seq;
  p.payload_len = len;
  p.syn = syn;
  p.first_of_session = first;
  p.hdr_src_ip = session_.src_ip;
  p.hdr_src_port = session_.src_port;
  return p;
}

void Simulation::start_session() {
  if (sc_.proto == Proto::Tcp) {
    if (established_) return;
    channel_->transmit_uplink(make_packet(0, 0, true, true), session_.bssid);
    // Lost handshakes retry on a coarse timer.
    eng_.schedule(eng_.now() + kSynRetry, kSenderNode, EventKind::TimerExpiry, [this] {
      if (!established_ && eng_.now() < sc_.duration()) start_session();
    });
  } else {
    schedule_udp_tick(0);
  }
}

void Simulation::schedule_udp_tick(uint64_t k) {
  SimTime t = static_cast<SimTime>(k * static_cast<uint64_t>(sc_.payload_size) * 8 *
                                   kUsPerSec / static_cast<uint64_t>(udp_rate_));
  if (t >= sc_.duration()) return;
  eng_.schedule(t, kSenderNode, EventKind::AppSend, [this, k] {
    Packet p = make_packet(k, static_cast<uint32_t>(sc_.payload_size), false, k == 0);
    sender_stream_bytes_ += sc_.payload_size;
    ++udp_packets_sent_;
    channel_->transmit_uplink(p, session_.bssid);
    schedule_udp_tick(k + 1);
  });
}

void Simulation::schedule_deposit_tick(uint64_t k) {
  if (deposit_epoch_ < 0) deposit_epoch_ = eng_.now();
  SimTime t = deposit_epoch_ +
              static_cast<SimTime>(k * static_cast<uint64_t>(sc_.payload_size) * 8 *
                                   kUsPerSec / static_cast<uint64_t>(sc_.sender_rate));
  if (t >= sc_.duration()) return;
  eng_.schedule(t, kSenderNode, EventKind::AppSend, [this, k] {
    tcp_sender_->deposit(sc_.payload_size);
    schedule_deposit_tick(k + 1);
  });
}

void Simulation::send_tcp_segment(uint64_t seq, uint32_t len, bool /*retransmit*/) {
  Packet p = make_packet(seq, len, false, false);
  sender_stream_bytes_ = std::max<int64_t>(sender_stream_bytes_,
                                           static_cast<int64_t>(seq + len));
  channel_->transmit_uplink(p, session_.bssid);
}

void Simulation::on_sender_frame(const WifiFrame& frame) {
  const Packet& p = frame.inner;
  if (!p.reverse || sc_.proto != Proto::Tcp) return;
  if (p.syn) {
    if (!established_) {
      established_ = true;
      if (p.adv_window > 0) tcp_sender_->on_ack(0, p.adv_window);
      if (sc_.sender_rate == 0) {
        tcp_sender_->start_unlimited();
      } else {
        schedule_deposit_tick(0);
      }
    }
    return;
  }
  tcp_sender_->on_ack(p.ack, p.adv_window);
}

void Simulation::on_gw_uplink(int ap_index, LinkMessage&& msg) {
  if (auto* t = std::get_if<TunnelMessage>(&msg)) {
    gw_->on_tunnel(ap_index, std::move(*t));
  } else {
    gw_->on_default_uplink(std::move(std::get<Packet>(msg)));
  }
}

void Simulation::on_ap_downlink(int ap_index, LinkMessage&& msg) {
  if (auto* t = std::get_if<TunnelMessage>(&msg)) {
    if (sc_.bapu) aps_[ap_index]->on_tunnel(eng_.now(), std::move(*t));
    return;
  }
  Packet p = std::move(std::get<Packet>(msg));
  if (sc_.bapu) {
    aps_[ap_index]->on_reverse_packet(eng_.now(), std::move(p));
  } else {
    channel_->transmit_downlink(p, session_.bssid);
  }
}

void Simulation::on_dest_packet(Packet&& pkt) {
  if (!pkt.syn && pkt.hdr_src_ip == session_.src_ip) {
    // Every tunneled or forwarded packet should carry the public mapping.
    ++metrics_.nat_mismatches;
  }
  if (sc_.proto == Proto::Tcp) {
    if (pkt.syn) {
      Packet synack;
      synack.uid = next_uid_++;
      synack.session = session_;
      synack.reverse = true;
      synack.syn = true;
      synack.adv_window = sc_.adv_window;
      dst_to_gw_->enqueue(std::move(synack));
      return;
    }
    if (pkt.payload_len == 0) return;
    uint64_t before = tcp_receiver_->delivered_bytes();
    tcp_receiver_->on_segment(pkt.seq, pkt.payload_len);
    uint64_t after = tcp_receiver_->delivered_bytes();
    if (after > before) {
      metrics_.record_delivery(eng_.now(), static_cast<int64_t>(after - before));
    }
    return;
  }
  // UDP sink: count each datagram once.
  if (dest_seen_uids_.insert(pkt.uid).second) {
    metrics_.record_delivery(eng_.now(), pkt.payload_len);
  } else {
    metrics_.dup_bytes_at_dest += pkt.payload_len;
  }
}

void Simulation::send_dest_ack(uint64_t ack, int64_t window, bool /*dup*/) {
  Packet p;
  p.uid = next_uid_++;
  p.session = session_;
  p.reverse = true;
  p.ack = ack;
  p.adv_window = window;
  dst_to_gw_->enqueue(std::move(p));
}

void Simulation::run() {
  if (sc_.proto == Proto::Tcp && tcp_sender_) {
    eng_.schedule(sc_.duration(), kSenderNode, EventKind::AppSend,
                  [this] { tcp_sender_->stop(); });
  }
  summary_ = eng_.run_until(sc_.duration() + kDrainGrace);
  finalize_metrics();
}

void Simulation::finalize_metrics() {
  if (channel_) {
    const ChannelStats& cs = channel_->stats();
    metrics_.wifi_packets = cs.packets;
    metrics_.wifi_attempts = cs.attempts;
    metrics_.mac_failures = cs.mac_failures;
    metrics_.wifi_busy_us = cs.busy_time;
  }
  if (tcp_sender_) {
    metrics_.retransmits = tcp_sender_->retransmit_count();
    metrics_.fast_retransmits = tcp_sender_->fast_retransmit_count();
    metrics_.rto_events = tcp_sender_->rto_count();
  }
  if (tcp_receiver_) {
    metrics_.dup_bytes_at_dest += static_cast<int64_t>(tcp_receiver_->duplicate_bytes());
  }
  for (const auto& up : up_) metrics_.tunnel_drops += up->drops();
}

void Simulation::build_shaper_study() {
  session_.proto = Proto::Udp;
  ShaperConfig cfg;
  cfg.rate = sc_.uplink_rate;
  cfg.background_floor = sc_.background_floor;
  shaper_ = std::make_unique<PriorityShaperLink>(
      eng_, kDestNode, cfg, [this](TrafficClass cls, LinkMessage&& m) {
        int64_t bytes = link_message_wire_bytes(m);
        int64_t second = eng_.now() / kUsPerSec;
        if (cls == TrafficClass::Regular) {
          metrics_.regular_bins[second] += bytes;
        } else {
          metrics_.background_bins[second] += bytes;
        }
      });

  // Background saturates throughout; regular traffic occupies the middle
  // third of the run.
  SimTime reg_start = sc_.duration() / 3;
  SimTime reg_end = 2 * sc_.duration() / 3;
  int64_t wire = ip_packet_bytes(Proto::Udp, sc_.payload_size) + kDefaultPathFraming;

  if (sc_.background_rate > 0) {
    SimTime bg_gap = serialization_us(wire, sc_.background_rate);
    for (SimTime t = 0; t < sc_.duration(); t += bg_gap) {
      eng_.schedule(t, kSenderNode, EventKind::AppSend, [this] {
        Packet p = make_packet(0, static_cast<uint32_t>(sc_.payload_size), false, false);
        shaper_->enqueue(TrafficClass::Background, std::move(p));
      });
    }
  }
  if (sc_.regular_rate > 0) {
    SimTime reg_gap = serialization_us(wire, sc_.regular_rate);
    for (SimTime t = reg_start; t < reg_end; t += reg_gap) {
      eng_.schedule(t, kSenderNode, EventKind::AppSend, [this] {
        Packet p = make_packet(0, static_cast<uint32_t>(sc_.payload_size), false, false);
        shaper_->enqueue(TrafficClass::Regular, std::move(p));
      });
    }
  }
}

}  // namespace bapusim
