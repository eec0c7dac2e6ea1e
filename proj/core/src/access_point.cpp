#include "bapusim/access_point.hpp"

#include <algorithm>

namespace bapusim {

AccessPoint::AccessPoint(ApConfig cfg, Hooks hooks, RngStream rng, Metrics* metrics)
    : cfg_(std::move(cfg)), hooks_(std::move(hooks)), rng_(rng), metrics_(metrics) {}

std::pair<SessionKey, bool> AccessPoint::identify_session(
    const WifiFrame& frame, std::span<const uint16_t> bapu_ports) {
  const Packet& p = frame.inner;
  SessionKey key = p.session;
  key.bssid = frame.bssid;
  bool is_bapu = std::find(bapu_ports.begin(), bapu_ports.end(), key.dst_port) !=
                 bapu_ports.end();
  return {key, is_bapu};
}

AccessPoint::Session& AccessPoint::session_for(SimTime, const SessionKey& key) {
  auto it = sessions_.find(key);
  if (it == sessions_.end()) {
    Session s;
    s.key = key;
    s.hash = session_hash(key);
    it = sessions_.emplace(key, std::move(s)).first;
    by_hash_[it->second.hash] = key;
    // Register as a contributor for the new session.
    TunnelMessage reg;
    reg.type = MsgType::Register;
    reg.session_hash = it->second.hash;
    hooks_.send_tunnel(std::move(reg));
    if (metrics_) metrics_->control_bytes += kFrameHeaderBytes;
  }
  return it->second;
}

bool AccessPoint::remember_ipid(Session& s, uint16_t ipid) {
  if (s.seen[ipid]) return false;
  s.seen[ipid] = true;
  s.seen_order.push_back(ipid);
  if (s.seen_order.size() > cfg_.dedup_window) {
    s.seen[s.seen_order.front()] = false;
    s.seen_order.pop_front();
  }
  return true;
}

void AccessPoint::on_frame(SimTime now, const WifiFrame& frame) {
  auto [key, is_bapu] = identify_session(frame, cfg_.bapu_ports);
  if (!is_bapu) return;

  Session& s = session_for(now, key);
  const Packet& pkt = frame.inner;

  // Handshake segments and the first datagram travel the default uplink
  // path so NAT state installs along it; they are never tunneled. Only the
  // home AP forwards them.
  if (pkt.syn || pkt.is_pure_ack() || pkt.first_of_session) {
    if (cfg_.role == ApRole::Home && !pkt.is_pure_ack()) {
      if (remember_ipid(s, pkt.ipid)) {
        hooks_.send_default_uplink(Packet(pkt));
      }
    }
    return;
  }

  if (!remember_ipid(s, pkt.ipid)) {
    if (metrics_) ++metrics_->ap_duplicates;
    return;
  }

  if (cfg_.strategy == Strategy::FcfsCapacity) {
    buffer_and_report(now, s, pkt);
  } else {
    modulo_forward(s, pkt);
  }
}

void AccessPoint::buffer_and_report(SimTime, Session& s, const Packet& pkt) {
  // Early-drop discipline: as the buffer fills past the threshold, arrivals
  // are dropped with a probability ramping to one at capacity. Random early
  // drops land on different packets at different APs, so a packet lost here
  // usually survives at a peer and the scheduler routes around the loss.
  size_t occupancy = s.buffer.size();
  if (occupancy >= cfg_.buffer_cap) {
    if (metrics_) ++metrics_->ap_buffer_drops;
    return;
  }
  size_t threshold = cfg_.buffer_cap * 3 / 4;
  if (occupancy > threshold) {
    double p = static_cast<double>(occupancy - threshold) /
               static_cast<double>(cfg_.buffer_cap - threshold);
    if (rng_.bernoulli(p)) {
      if (metrics_) ++metrics_->ap_buffer_drops;
      return;
    }
  }
  s.buffer.emplace(pkt.ipid, pkt);
  make_report(s, pkt);
}

void AccessPoint::make_report(Session& s, const Packet& pkt) {
  TunnelMessage rep;
  rep.type = MsgType::Report;
  rep.apid = s.apid;
  rep.session_hash = s.hash;
  rep.ipid = pkt.ipid;
  rep.tcp_seq = static_cast<uint32_t>(pkt.seq);
  rep.capacity = static_cast<uint32_t>(std::max<int64_t>(0, hooks_.tunnel_free_bytes()));
  if (!s.registered) {
    s.pending_reports.push_back(std::move(rep));
    return;
  }
  hooks_.send_tunnel(std::move(rep));
  if (metrics_) {
    ++metrics_->reports_sent;
    metrics_->control_bytes += kFrameHeaderBytes;
  }
}

void AccessPoint::modulo_forward(Session& s, const Packet& pkt) {
  bool designated = ipid_hash(pkt.ipid) % cfg_.n_aps == static_cast<uint64_t>(cfg_.index);
  bool redundant = cfg_.strategy == Strategy::ModuloRedundant && !designated &&
                   rng_.bernoulli(cfg_.p_extra);
  if (designated || redundant) forward_packet(s, pkt);
}

void AccessPoint::forward_packet(Session& s, Packet pkt) {
  if (s.nat) {
    pkt.hdr_src_ip = s.nat->public_ip;
    pkt.hdr_src_port = s.nat->public_port;
  }
  TunnelMessage data;
  data.type = MsgType::Data;
  data.apid = s.apid;
  data.session_hash = s.hash;
  data.ipid = pkt.ipid;
  data.tcp_seq = static_cast<uint32_t>(pkt.seq);
  data.inner = pkt;
  if (!hooks_.send_tunnel(std::move(data))) {
    // Send queue overflowed despite the capacity gate (control traffic
    // shares the queue). Keep the packet and report the miss so the
    // gateway can schedule it again once the queue drains.
    if (metrics_) ++metrics_->tunnel_drops;
    if (cfg_.strategy == Strategy::FcfsCapacity) {
      if (s.buffer.size() < cfg_.buffer_cap) s.buffer.emplace(pkt.ipid, pkt);
      send_nack(s, pkt.ipid);
    }
  }
}

void AccessPoint::send_nack(Session& s, uint16_t ipid) {
  TunnelMessage nack;
  nack.type = MsgType::Nack;
  nack.apid = s.apid;
  nack.session_hash = s.hash;
  nack.ipid = ipid;
  hooks_.send_tunnel(std::move(nack));
  if (metrics_) {
    ++metrics_->nacks;
    metrics_->control_bytes += kFrameHeaderBytes;
  }
}

void AccessPoint::on_tunnel(SimTime now, TunnelMessage&& msg) {
  auto key_it = by_hash_.find(msg.session_hash);
  if (key_it == by_hash_.end()) return;
  Session& s = sessions_.at(key_it->second);

  switch (msg.type) {
    case MsgType::Register:
      s.apid = msg.apid;
      s.registered = true;
      s.nat = msg.nat;
      while (!s.pending_reports.empty()) {
        TunnelMessage rep = std::move(s.pending_reports.front());
        s.pending_reports.pop_front();
        rep.apid = s.apid;
        rep.capacity =
            static_cast<uint32_t>(std::max<int64_t>(0, hooks_.tunnel_free_bytes()));
        hooks_.send_tunnel(std::move(rep));
        if (metrics_) {
          ++metrics_->reports_sent;
          metrics_->control_bytes += kFrameHeaderBytes;
        }
      }
      break;
    case MsgType::Schedule:
      handle_schedule(now, s, msg);
      break;
    default:
      break;
  }
}

void AccessPoint::handle_schedule(SimTime now, Session& s, const TunnelMessage& msg) {
  sweep_retention(now, s);
  if (msg.apid == s.apid && s.apid != 0) {
    auto it = s.buffer.find(msg.ipid);
    Packet pkt;
    bool have = false;
    if (it != s.buffer.end()) {
      pkt = it->second;
      s.buffer.erase(it);
      have = true;
    } else if (auto rit = s.retention.find(msg.ipid); rit != s.retention.end()) {
      // A reschedule after some other AP reported a miss.
      if (rit->second.second > now) {
        pkt = rit->second.first;
        have = true;
      }
      s.retention.erase(rit);
    }
    if (have && cfg_.fault_evict_prob > 0 && rng_.bernoulli(cfg_.fault_evict_prob)) {
      have = false;
      if (metrics_) ++metrics_->fault_evictions;
    }
    if (have) {
      forward_packet(s, pkt);
    } else {
      send_nack(s, msg.ipid);
    }
    return;
  }
  // Scheduled elsewhere (or released): drop from the buffer but keep a
  // short-lived copy in case the gateway needs to reschedule here.
  auto it = s.buffer.find(msg.ipid);
  if (it != s.buffer.end()) {
    s.retention.emplace(msg.ipid, std::make_pair(it->second, now + cfg_.retention_ttl));
    s.buffer.erase(it);
  }
}

void AccessPoint::sweep_retention(SimTime now, Session& s) {
  if (s.retention.size() < 2 * cfg_.buffer_cap) return;
  for (auto it = s.retention.begin(); it != s.retention.end();) {
    it = it->second.second <= now ? s.retention.erase(it) : std::next(it);
  }
}

void AccessPoint::on_reverse_packet(SimTime, Packet&& pkt) {
  hooks_.deliver_to_sender(pkt);
}

size_t AccessPoint::buffered_packets() const {
  size_t n = 0;
  for (const auto& [_, s] : sessions_) n += s.buffer.size();
  return n;
}

bool AccessPoint::session_registered(const SessionKey& key) const {
  auto it = sessions_.find(key);
  return it != sessions_.end() && it->second.registered;
}

}  // namespace bapusim
