#include "bapusim/gateway.hpp"

#include <algorithm>

namespace bapusim {

Gateway::Gateway(Engine& eng, NodeId node, GatewayConfig cfg, Hooks hooks,
                 Metrics* metrics)
    : eng_(eng), node_(node), cfg_(cfg), hooks_(std::move(hooks)), metrics_(metrics) {}

Gateway::Session& Gateway::session_for_hash(uint64_t hash) {
  auto it = sessions_.find(hash);
  if (it == sessions_.end()) {
    Session s;
    s.hash = hash;
    s.apid_of_ap.assign(cfg_.n_aps, 0);
    s.registered.assign(cfg_.n_aps, false);
    s.pending_by_ap.assign(cfg_.n_aps, {});
    s.outstanding.assign(cfg_.n_aps, 0);
    s.last_capacity.assign(cfg_.n_aps, 0);
    s.nat_index = next_nat_index_++;
    it = sessions_.emplace(hash, std::move(s)).first;
  }
  return it->second;
}

Gateway::Session& Gateway::session_for_key(const SessionKey& key) {
  uint64_t hash = session_hash(key);
  Session& s = session_for_hash(hash);
  if (s.key == SessionKey{}) {
    s.key = key;
    hash_of_key_[key] = hash;
  }
  return s;
}

void Gateway::on_tunnel(int ap_index, TunnelMessage&& msg) {
  Session& s = session_for_hash(msg.session_hash);
  switch (msg.type) {
    case MsgType::Register:
      on_register(s, ap_index);
      break;
    case MsgType::Report:
      on_report(s, ap_index, msg);
      break;
    case MsgType::Data:
      on_data(s, ap_index, std::move(msg));
      break;
    case MsgType::Nack:
      on_nack(s, ap_index, msg);
      break;
    default:
      break;
  }
}

void Gateway::on_register(Session& s, int ap_index) {
  if (s.apid_of_ap[ap_index] == 0) {
    s.apid_of_ap[ap_index] = s.next_apid++;
  }
  // The reply carries the NAT record, so it waits until the first
  // default-path packet has installed one.
  s.awaiting_reply.push_back(ap_index);
  if (s.nat_installed) reply_pending_registrations(s);
}

void Gateway::reply_pending_registrations(Session& s) {
  for (int ap : s.awaiting_reply) {
    TunnelMessage reply;
    reply.type = MsgType::Register;
    reply.apid = s.apid_of_ap[ap];
    reply.session_hash = s.hash;
    reply.nat = s.nat;
    s.registered[ap] = true;
    if (metrics_) metrics_->control_bytes += reply.wire_bytes();
    hooks_.send_tunnel_down(ap, std::move(reply));
  }
  s.awaiting_reply.clear();
}

void Gateway::on_default_uplink(Packet&& pkt) {
  Session& s = session_for_key(pkt.session);
  if (!s.nat_installed) {
    s.nat.public_ip = cfg_.nat_public_ip;
    s.nat.public_port = static_cast<uint16_t>(cfg_.nat_port_base + s.nat_index);
    s.nat_installed = true;
    reply_pending_registrations(s);
  }
  pkt.hdr_src_ip = s.nat.public_ip;
  pkt.hdr_src_port = s.nat.public_port;
  if (pkt.payload_len > 0) {
    // First datagram of a UDP session: remember it arrived so late reports
    // for it are ignored rather than re-scheduled.
    if (metrics_) ++metrics_->injected_uid_count[pkt.uid];
    IpidEntry& e = s.table[pkt.ipid];
    e.state = IpidState::Injected;
    e.injected_at = eng_.now();
    s.retire_queue.emplace_back(eng_.now(), pkt.ipid);
    inject(s, std::move(pkt));
  } else {
    hooks_.inject_to_dest(std::move(pkt));
  }
}

int64_t Gateway::effective_capacity(const Session& s, int ap_index) const {
  return s.last_capacity[ap_index] - s.outstanding[ap_index] -
         cfg_.capacity_margin_bytes;
}

void Gateway::on_report(Session& s, int ap_index, const TunnelMessage& msg) {
  gc_table(s);
  s.last_capacity[ap_index] = msg.capacity;

  IpidEntry& e = s.table[msg.ipid];
  if (e.state == IpidState::Injected || e.state == IpidState::Scheduled) {
    if (metrics_) ++metrics_->late_reports;
    // Tell holders to let go of a packet that already made it through the
    // default path; a normal schedule broadcast did this for tunneled ones.
    if (e.state == IpidState::Injected && !e.release_broadcast) {
      e.release_broadcast = true;
      TunnelMessage rel;
      rel.type = MsgType::Schedule;
      rel.apid = 0;
      rel.session_hash = s.hash;
      rel.ipid = msg.ipid;
      broadcast(s, rel);
    }
    return;
  }
  if (e.state == IpidState::Abandoned) return;

  if (e.reporters.empty()) {
    e.tcp_seq = msg.tcp_seq;
    e.data_wire = kFrameHeaderBytes +
                  ip_packet_bytes(s.key.proto, cfg_.segment_payload) + kDataMsgFraming;
  }
  e.reporters.push_back(Reporter{ap_index, msg.capacity});

  if (s.key.proto == Proto::Tcp && cfg_.mode == Mode::Proactive) {
    advance_cursor(s, msg.tcp_seq, static_cast<uint32_t>(cfg_.segment_payload));
  }

  if (cfg_.strategy == Strategy::FcfsCapacity && e.state == IpidState::Pending) {
    // Queue behind earlier unscheduled reports from this AP; scheduling out
    // of report order would re-order a FIFO path for no reason.
    s.pending_by_ap[ap_index].push_back(msg.ipid);
    drain_pending(s, ap_index);
  }
}

bool Gateway::try_schedule(Session& s, uint16_t ipid, IpidEntry& e) {
  for (const Reporter& r : e.reporters) {
    if (e.tried_mask & (1u << r.ap_index)) continue;
    if (effective_capacity(s, r.ap_index) >= e.data_wire) {
      schedule_to(s, ipid, e, r.ap_index);
      return true;
    }
  }
  return false;
}

void Gateway::schedule_to(Session& s, uint16_t ipid, IpidEntry& e, int ap_index) {
  e.state = IpidState::Scheduled;
  e.scheduled_ap = ap_index;
  ++e.attempts;
  s.outstanding[ap_index] += e.data_wire;
  TunnelMessage sched;
  sched.type = MsgType::Schedule;
  sched.apid = s.apid_of_ap[ap_index];
  sched.session_hash = s.hash;
  sched.ipid = ipid;
  broadcast(s, sched);
  if (metrics_) {
    metrics_->sched_log.push_back(SchedLogRow{
        eng_.now(), ipid, s.apid_of_ap[ap_index],
        static_cast<int>(e.reporters.size())});
  }
}

void Gateway::broadcast(Session& s, const TunnelMessage& msg) {
  for (int ap = 0; ap < cfg_.n_aps; ++ap) {
    if (!s.registered[ap]) continue;
    if (metrics_) metrics_->control_bytes += msg.wire_bytes();
    hooks_.send_tunnel_down(ap, TunnelMessage(msg));
  }
}

void Gateway::drain_pending(Session& s, int ap_index) {
  auto& fifo = s.pending_by_ap[ap_index];
  while (!fifo.empty()) {
    uint16_t ipid = fifo.front();
    auto it = s.table.find(ipid);
    if (it == s.table.end() || it->second.state != IpidState::Pending) {
      fifo.pop_front();
      continue;
    }
    IpidEntry& e = it->second;
    if (e.tried_mask & (1u << ap_index)) {
      fifo.pop_front();
      continue;
    }
    if (effective_capacity(s, ap_index) < e.data_wire) break;
    schedule_to(s, ipid, e, ap_index);
    fifo.pop_front();
  }
}

void Gateway::on_data(Session& s, int ap_index, TunnelMessage&& msg) {
  Packet pkt = std::move(*msg.inner);
  if (metrics_) ++metrics_->injected_uid_count[pkt.uid];
  auto it = s.table.find(msg.ipid);
  if (it != s.table.end() && it->second.state == IpidState::Scheduled &&
      it->second.scheduled_ap == ap_index) {
    s.outstanding[ap_index] -= it->second.data_wire;
    it->second.state = IpidState::Injected;
    it->second.injected_at = eng_.now();
    s.retire_queue.emplace_back(eng_.now(), msg.ipid);
  }
  if (s.key.proto == Proto::Tcp && cfg_.mode == Mode::Buffering) {
    inject_in_order(s, std::move(pkt));
  } else {
    inject(s, std::move(pkt));
  }
  drain_pending(s, ap_index);
}

void Gateway::inject(Session& s, Packet&& pkt) {
  // APs rewrite from their NAT record; anything still carrying the private
  // tuple (a forwarder not yet registered) is rewritten here.
  if (s.nat_installed && pkt.hdr_src_ip != s.nat.public_ip) {
    pkt.hdr_src_ip = s.nat.public_ip;
    pkt.hdr_src_port = s.nat.public_port;
  }
  if (metrics_ && s.key.proto == Proto::Tcp && pkt.payload_len > 0) {
    metrics_->record_injected_interval(pkt.seq, pkt.seq + pkt.payload_len);
  }
  hooks_.inject_to_dest(std::move(pkt));
}

void Gateway::inject_in_order(Session& s, Packet&& pkt) {
  uint64_t end = pkt.seq + pkt.payload_len;
  if (pkt.seq <= s.expected_seq) {
    s.expected_seq = std::max(s.expected_seq, end);
    inject(s, std::move(pkt));
    // Release buffered segments made contiguous.
    auto it = s.reorder.begin();
    while (it != s.reorder.end() && it->first <= s.expected_seq) {
      Packet held = std::move(it->second);
      it = s.reorder.erase(it);
      s.expected_seq = std::max(s.expected_seq, held.seq + held.payload_len);
      inject(s, std::move(held));
    }
    return;
  }
  s.reorder.emplace(pkt.seq, std::move(pkt));
  // On overflow release lowest-sequence-first regardless of gaps; relative
  // order is preserved, the hole is simply given up on.
  while (s.reorder.size() > cfg_.reorder_cap_segments) {
    auto first = s.reorder.begin();
    Packet held = std::move(first->second);
    s.reorder.erase(first);
    s.expected_seq = std::max(s.expected_seq, held.seq + held.payload_len);
    inject(s, std::move(held));
  }
}

void Gateway::on_nack(Session& s, int ap_index, const TunnelMessage& msg) {
  auto it = s.table.find(msg.ipid);
  if (it == s.table.end()) return;
  IpidEntry& e = it->second;
  if (e.state != IpidState::Scheduled || e.scheduled_ap != ap_index) return;
  s.outstanding[ap_index] -= e.data_wire;
  e.tried_mask |= 1u << ap_index;
  e.state = IpidState::Pending;
  e.scheduled_ap = -1;
  bool spoofing = cfg_.mode == Mode::Proactive && s.key.proto == Proto::Tcp;
  if (!cfg_.reschedule_on_nack ||
      (!spoofing && e.attempts >= cfg_.max_schedule_attempts)) {
    e.state = IpidState::Abandoned;
    if (metrics_) ++metrics_->abandoned;
    return;
  }
  if (metrics_) ++metrics_->reschedules;
  if (try_schedule(s, msg.ipid, e)) return;
  bool has_untried = false;
  for (const Reporter& r : e.reporters) {
    if (!(e.tried_mask & (1u << r.ap_index))) {
      s.pending_by_ap[r.ap_index].push_back(msg.ipid);
      has_untried = true;
    }
  }
  if (!has_untried) {
    // Every reporter was tried once. A nacking AP keeps its copy, so start
    // another round when capacity frees up instead of giving up.
    e.tried_mask = 0;
    for (const Reporter& r : e.reporters) {
      s.pending_by_ap[r.ap_index].push_back(msg.ipid);
    }
  }
  for (const Reporter& r : e.reporters) drain_pending(s, r.ap_index);
}

void Gateway::advance_cursor(Session& s, uint64_t seq, uint32_t len) {
  if (len == 0) return;
  uint64_t end = seq + len;
  s.highest_reported = std::max(s.highest_reported, end);
  auto it = s.reported.lower_bound(seq);
  if (it != s.reported.begin()) {
    auto prev = std::prev(it);
    if (prev->second >= seq) it = prev;
  }
  uint64_t lo = seq, hi = end;
  while (it != s.reported.end() && it->first <= hi) {
    lo = std::min(lo, it->first);
    hi = std::max(hi, it->second);
    it = s.reported.erase(it);
  }
  s.reported[lo] = hi;

  uint64_t new_cursor = s.cursor;
  if (!s.reported.empty() && s.reported.begin()->first <= s.cursor) {
    new_cursor = std::max(new_cursor, s.reported.begin()->second);
  }
  if (new_cursor > s.cursor) {
    SimTime now = eng_.now();
    if (s.last_advance > 0) {
      SimTime gap = now - s.last_advance;
      if (s.advance_gap_smoothed < 0) {
        s.advance_gap_smoothed = gap;
      } else {
        SimTime err = gap - s.advance_gap_smoothed;
        s.advance_gap_var = (3 * s.advance_gap_var + (err < 0 ? -err : err)) / 4;
        s.advance_gap_smoothed = (7 * s.advance_gap_smoothed + gap) / 8;
      }
    }
    s.last_advance = now;
    s.cursor = new_cursor;
    s.probe_backoff = 0;
    send_spoofed_ack(s);
    arm_probe(s);
  }
}

void Gateway::send_spoofed_ack(Session& s) {
  s.last_spoofed = s.cursor;
  Packet ack;
  ack.session = s.key;
  ack.reverse = true;
  ack.spoofed = true;
  ack.ack = s.cursor;
  ack.adv_window = s.observed_adv_window > 0 ? s.observed_adv_window : (1 << 20);
  if (metrics_) {
    ++metrics_->spoofed_acks;
    metrics_->last_spoofed_ack = std::max(metrics_->last_spoofed_ack, s.last_spoofed);
  }
  hooks_.send_to_sender(std::move(ack));
}

void Gateway::arm_probe(Session& s) {
  if (s.probe_timer.valid()) eng_.cancel(s.probe_timer);
  SimTime gap = s.advance_gap_smoothed < 0 ? 0 : s.advance_gap_smoothed;
  // A missing report may simply be stuck behind the data this scheduler
  // itself parked on a tunnel; wait out the deepest backlog plus measured
  // jitter before declaring the sequence lost everywhere.
  int64_t deepest = 0;
  for (int ap = 0; ap < cfg_.n_aps; ++ap) {
    deepest = std::max(deepest, s.outstanding[ap]);
  }
  SimTime window = serialization_us(deepest, cfg_.uplink_rate) +
                   cfg_.probe_gain * gap + 4 * s.advance_gap_var + cfg_.probe_min;
  window = std::min(window << s.probe_backoff, cfg_.probe_max);
  uint64_t hash = s.hash;
  s.probe_timer = eng_.schedule(eng_.now() + window, node_, EventKind::TimerExpiry,
                                [this, hash] { on_probe(hash); });
}

void Gateway::on_probe(uint64_t hash) {
  Session& s = session_for_hash(hash);
  s.probe_timer = {};
  // Only a visible gap (reported bytes beyond the cursor) implies the next
  // expected sequence was lost on every AP; an idle stream stays quiet.
  if (s.highest_reported <= s.cursor) return;
  if (s.probe_backoff < 8) ++s.probe_backoff;
  for (int i = 0; i < 3; ++i) {
    Packet dup;
    dup.session = s.key;
    dup.reverse = true;
    dup.spoofed = true;
    dup.ack = s.cursor;
    dup.adv_window = s.observed_adv_window > 0 ? s.observed_adv_window : (1 << 20);
    if (metrics_) ++metrics_->spoofed_dupacks;
    hooks_.send_to_sender(std::move(dup));
  }
  arm_probe(s);
}

void Gateway::on_reverse(Packet&& pkt) {
  if (cfg_.mode == Mode::Proactive && pkt.is_pure_ack()) {
    Session& s = session_for_key(pkt.session);
    if (pkt.adv_window > 0) s.observed_adv_window = pkt.adv_window;
    if (metrics_) ++metrics_->dropped_real_acks;
    return;
  }
  hooks_.send_to_sender(std::move(pkt));
}

void Gateway::gc_table(Session& s) {
  SimTime cutoff = eng_.now() - cfg_.ipid_recycle_guard;
  while (!s.retire_queue.empty() && s.retire_queue.front().first < cutoff) {
    auto [when, ipid] = s.retire_queue.front();
    s.retire_queue.pop_front();
    auto it = s.table.find(ipid);
    if (it != s.table.end() && it->second.state == IpidState::Injected &&
        it->second.injected_at == when) {
      s.table.erase(it);
    }
  }
}

uint64_t Gateway::contiguity_cursor(const SessionKey& key) const {
  auto it = hash_of_key_.find(key);
  if (it == hash_of_key_.end()) return 0;
  return sessions_.at(it->second).cursor;
}

uint64_t Gateway::last_spoofed_ack(const SessionKey& key) const {
  auto it = hash_of_key_.find(key);
  if (it == hash_of_key_.end()) return 0;
  return sessions_.at(it->second).last_spoofed;
}

int64_t Gateway::outstanding_bytes(const SessionKey& key, int ap_index) const {
  auto it = hash_of_key_.find(key);
  if (it == hash_of_key_.end()) return 0;
  return sessions_.at(it->second).outstanding[ap_index];
}

}  // namespace bapusim
