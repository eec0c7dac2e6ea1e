#include "bapusim/tcp_endpoint.hpp"

#include <algorithm>

namespace bapusim {

const char* to_string(TcpTraceRecord::Tag tag) {
  switch (tag) {
    case TcpTraceRecord::Tag::Send: return "send";
    case TcpTraceRecord::Tag::Ack: return "ack";
    case TcpTraceRecord::Tag::DupAck: return "dupack";
    case TcpTraceRecord::Tag::Rto: return "rto";
    case TcpTraceRecord::Tag::FastRetransmit: return "fast_retransmit";
  }
  return "?";
}

namespace {
constexpr int64_t kNoSsthresh = int64_t{1} << 40;
}

TcpSender::TcpSender(Engine& eng, NodeId node, TcpSenderConfig cfg, SendFn send,
                     TraceFn trace)
    : eng_(eng),
      node_(node),
      cfg_(cfg),
      send_(std::move(send)),
      trace_(std::move(trace)),
      cwnd_(cfg.initial_cwnd_segments * cfg.mss),
      ssthresh_(cfg.initial_ssthresh_segments > 0
                    ? cfg.initial_ssthresh_segments * cfg.mss
                    : kNoSsthresh),
      peer_window_(cfg.adv_window),
      rto_cur_(cfg.initial_rto) {}

void TcpSender::start_unlimited() {
  unlimited_ = true;
  try_send();
}

void TcpSender::deposit(int64_t bytes) {
  app_avail_ += bytes;
  try_send();
}

void TcpSender::stop() {
  stopped_ = true;
  unlimited_ = false;
  app_avail_ = 0;
}

void TcpSender::trace(TcpTraceRecord::Tag tag) {
  if (!trace_) return;
  TcpTraceRecord r;
  r.time = eng_.now();
  r.cwnd_segments = static_cast<double>(cwnd_) / cfg_.mss;
  r.ssthresh_segments = static_cast<double>(std::min(ssthresh_, kNoSsthresh)) / cfg_.mss;
  r.retransmits = retransmits_;
  r.tag = tag;
  trace_(r);
}

void TcpSender::try_send() {
  int64_t wnd = std::min(cwnd_, peer_window_);
  while (!stopped_) {
    int64_t avail = unlimited_ ? cfg_.mss : std::min(app_avail_, cfg_.mss);
    if (avail <= 0) break;
    if (flight_bytes() + avail > wnd) break;
    auto len = static_cast<uint32_t>(avail);
    uint64_t seq = snd_nxt_;
    snd_nxt_ += len;
    if (!unlimited_) app_avail_ -= len;
    outstanding_.push_back(SegRecord{snd_nxt_, eng_.now(), false});
    emit(seq, len, false);
    trace(TcpTraceRecord::Tag::Send);
  }
}

void TcpSender::emit(uint64_t seq, uint32_t len, bool retransmit) {
  if (retransmit) ++retransmits_;
  if (!rto_timer_.valid()) arm_rto();
  send_(seq, len, retransmit);
}

void TcpSender::retransmit_front() {
  uint32_t len = cfg_.mss;
  if (!outstanding_.empty() && outstanding_.front().seq_end > snd_una_) {
    len = static_cast<uint32_t>(
        std::min<uint64_t>(outstanding_.front().seq_end - snd_una_, cfg_.mss));
    outstanding_.front().retransmitted = true;
  }
  emit(snd_una_, len, true);
}

void TcpSender::arm_rto() {
  if (rto_timer_.valid()) eng_.cancel(rto_timer_);
  rto_timer_ = eng_.schedule(eng_.now() + rto_cur_, node_, EventKind::TimerExpiry,
                             [this] { on_rto(); });
}

void TcpSender::sample_rtt(uint64_t acked_to) {
  SimTime sample = -1;
  while (!outstanding_.empty() && outstanding_.front().seq_end <= acked_to) {
    // Karn: retransmitted segments give no timing information.
    if (!outstanding_.front().retransmitted) {
      sample = eng_.now() - outstanding_.front().sent_at;
    }
    outstanding_.pop_front();
  }
  if (sample < 0) return;
  if (srtt_ < 0) {
    srtt_ = sample;
    rttvar_ = sample / 2;
  } else {
    SimTime err = srtt_ - sample;
    rttvar_ = (3 * rttvar_ + (err < 0 ? -err : err)) / 4;
    srtt_ = (7 * srtt_ + sample) / 8;
  }
  rto_cur_ = std::clamp(srtt_ + 4 * rttvar_, cfg_.min_rto, cfg_.max_rto);
}

void TcpSender::on_ack(uint64_t ack_seq, int64_t adv_window) {
  if (ack_seq > snd_nxt_) {
    ++anomalous_acks_;
    return;
  }
  if (adv_window > 0) peer_window_ = adv_window;

  if (ack_seq > snd_una_) {
    int64_t bytes_acked = static_cast<int64_t>(ack_seq - snd_una_);
    sample_rtt(ack_seq);
    snd_una_ = ack_seq;
    dupacks_ = 0;
    if (in_recovery_) {
      if (ack_seq >= recover_) {
        cwnd_ = std::max(ssthresh_, cfg_.mss);
        in_recovery_ = false;
      } else {
        // Partial ACK: the next hole is lost too. Retransmit it and deflate
        // by the amount acked so inflation stays bounded.
        cwnd_ = std::max(cwnd_ - bytes_acked + cfg_.mss, cfg_.mss);
        retransmit_front();
      }
    } else if (cwnd_ < ssthresh_) {
      cwnd_ += cfg_.mss;
    } else {
      cwnd_ += std::max<int64_t>(1, cfg_.mss * cfg_.mss / cwnd_);
    }
    if (rto_timer_.valid()) {
      eng_.cancel(rto_timer_);
      rto_timer_ = {};
    }
    if (flight_bytes() > 0) arm_rto();
    trace(TcpTraceRecord::Tag::Ack);
    try_send();
    return;
  }

  if (flight_bytes() == 0) return;  // stale ack on an idle window

  ++dupacks_;
  trace(TcpTraceRecord::Tag::DupAck);
  if (!in_recovery_ && dupacks_ == 3) {
    enter_recovery();
  } else if (in_recovery_ && cfg_.fast_recovery_inflation) {
    cwnd_ += cfg_.mss;
    try_send();
  }
}

void TcpSender::enter_recovery() {
  ssthresh_ = std::max(flight_bytes() / 2, 2 * cfg_.mss);
  in_recovery_ = true;
  recover_ = snd_nxt_;
  ++fast_retransmits_;
  retransmit_front();
  cwnd_ = ssthresh_ + (cfg_.fast_recovery_inflation ? 3 * cfg_.mss : 0);
  trace(TcpTraceRecord::Tag::FastRetransmit);
  try_send();
}

void TcpSender::on_rto() {
  rto_timer_ = {};
  if (flight_bytes() == 0) return;
  ++rto_events_;
  ssthresh_ = std::max(flight_bytes() / 2, 2 * cfg_.mss);
  cwnd_ = cfg_.mss;
  dupacks_ = 0;
  in_recovery_ = false;
  rto_cur_ = std::min(rto_cur_ * 2, cfg_.max_rto);
  retransmit_front();
  arm_rto();
  trace(TcpTraceRecord::Tag::Rto);
}

TcpReceiver::TcpReceiver(Engine& eng, NodeId node, TcpReceiverConfig cfg, AckFn emit_ack)
    : eng_(eng), node_(node), cfg_(cfg), emit_ack_(std::move(emit_ack)) {}

void TcpReceiver::emit(bool dup) {
  if (delack_timer_.valid()) {
    eng_.cancel(delack_timer_);
    delack_timer_ = {};
  }
  pending_acks_ = 0;
  if (dup) ++dupacks_sent_;
  last_ack_sent_ = recv_next_;
  emit_ack_(recv_next_, cfg_.adv_window, dup);
}

void TcpReceiver::on_segment(uint64_t seq, uint32_t len) {
  if (len == 0) return;
  uint64_t end = seq + len;

  if (end <= recv_next_) {
    // Entirely old data; the ack we repeat is a duplicate from the sender's
    // point of view.
    duplicate_bytes_ += len;
    emit(true);
    return;
  }

  if (seq <= recv_next_) {
    duplicate_bytes_ += recv_next_ - seq;
    recv_next_ = end;
    // Absorb buffered runs made contiguous by this segment.
    bool filled_gap = false;
    auto it = buffered_.begin();
    while (it != buffered_.end() && it->first <= recv_next_) {
      if (it->second > recv_next_) {
        recv_next_ = it->second;
      } else {
        duplicate_bytes_ += it->second - it->first;
      }
      buffered_bytes_ -= static_cast<int64_t>(it->second - it->first);
      it = buffered_.erase(it);
      filled_gap = true;
    }
    if (cfg_.delayed_ack && !filled_gap) {
      if (++pending_acks_ >= 2) {
        emit(false);
      } else if (!delack_timer_.valid()) {
        delack_timer_ = eng_.schedule(eng_.now() + cfg_.delack_timeout, node_,
                                      EventKind::TimerExpiry, [this] {
                                        delack_timer_ = {};
                                        emit(false);
                                      });
      }
    } else {
      emit(false);
    }
    return;
  }

  // Out of order: buffer (merging overlaps) and duplicate-ack the hole.
  auto it = buffered_.lower_bound(seq);
  if (it != buffered_.begin()) {
    auto prev = std::prev(it);
    if (prev->second >= seq) it = prev;
  }
  uint64_t new_start = seq, new_end = end;
  while (it != buffered_.end() && it->first <= new_end) {
    uint64_t ov_lo = std::max(it->first, new_start);
    uint64_t ov_hi = std::min(it->second, new_end);
    if (ov_hi > ov_lo) duplicate_bytes_ += ov_hi - ov_lo;
    new_start = std::min(new_start, it->first);
    new_end = std::max(new_end, it->second);
    buffered_bytes_ -= static_cast<int64_t>(it->second - it->first);
    it = buffered_.erase(it);
  }
  buffered_[new_start] = new_end;
  buffered_bytes_ += static_cast<int64_t>(new_end - new_start);
  emit(true);
}

}  // namespace bapusim
