#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <vector>

#include "bapusim/engine.hpp"
#include "bapusim/units.hpp"

namespace bapusim {

struct TcpTraceRecord {
  enum class Tag : uint8_t { Send, Ack, DupAck, Rto, FastRetransmit };
  SimTime time = 0;
  double cwnd_segments = 0;
  double ssthresh_segments = 0;
  uint64_t retransmits = 0;
  Tag tag = Tag::Send;
};

const char* to_string(TcpTraceRecord::Tag tag);

struct TcpSenderConfig {
  int64_t mss = 1350;
  int initial_cwnd_segments = 2;
  int initial_ssthresh_segments = 64;  // 0 = no ceiling until the first loss
  SimTime min_rto = msec(200);
  SimTime max_rto = sec(60);
  SimTime initial_rto = sec(1);
  bool fast_recovery_inflation = true;  // +3 on entry, +1 per extra dupack
  int64_t adv_window = 1 << 20;         // static until the peer reports one
};

// Reno-style sender. Window growth is per ACK (slow start +1 segment,
// congestion avoidance +mss*mss/cwnd bytes), loss recovery is 3-dupack fast
// retransmit with NewReno partial-ACK handling so one loss episode costs one
// window halving, and RTO backs off exponentially. Sequence numbers are
// byte offsets from zero.
class TcpSender {
 public:
  // send(seq, len, retransmit) hands a segment to the network layer.
  using SendFn = std::function<void(uint64_t, uint32_t, bool)>;
  using TraceFn = std::function<void(const TcpTraceRecord&)>;

  TcpSender(Engine& eng, NodeId node, TcpSenderConfig cfg, SendFn send,
            TraceFn trace = nullptr);

  // Unlimited source (iperf-like): always has a segment to send.
  void start_unlimited();
  // Rate-limited source: credit application bytes as they become available.
  void deposit(int64_t bytes);
  void stop();  // application stops offering data

  void on_ack(uint64_t ack_seq, int64_t adv_window);

  int64_t cwnd_bytes() const { return cwnd_; }
  double cwnd_segments() const { return static_cast<double>(cwnd_) / cfg_.mss; }
  int64_t ssthresh_bytes() const { return ssthresh_; }
  uint64_t snd_una() const { return snd_una_; }
  uint64_t snd_nxt() const { return snd_nxt_; }
  int64_t flight_bytes() const { return static_cast<int64_t>(snd_nxt_ - snd_una_); }
  int dupack_count() const { return dupacks_; }
  bool in_recovery() const { return in_recovery_; }
  SimTime srtt() const { return srtt_; }
  SimTime current_rto() const { return rto_cur_; }
  uint64_t retransmit_count() const { return retransmits_; }
  uint64_t fast_retransmit_count() const { return fast_retransmits_; }
  uint64_t rto_count() const { return rto_events_; }
  uint64_t anomalous_acks() const { return anomalous_acks_; }

 private:
  struct SegRecord {
    uint64_t seq_end;
    SimTime sent_at;
    bool retransmitted;
  };

  void try_send();
  void emit(uint64_t seq, uint32_t len, bool retransmit);
  void retransmit_front();
  void enter_recovery();
  void on_rto();
  void arm_rto();
  void sample_rtt(uint64_t acked_to);
  void trace(TcpTraceRecord::Tag tag);

  Engine& eng_;
  NodeId node_;
  TcpSenderConfig cfg_;
  SendFn send_;
  TraceFn trace_;

  int64_t cwnd_;
  int64_t ssthresh_;
  uint64_t snd_una_ = 0;
  uint64_t snd_nxt_ = 0;
  int dupacks_ = 0;
  bool in_recovery_ = false;
  uint64_t recover_ = 0;
  int64_t peer_window_;
  bool unlimited_ = false;
  bool stopped_ = false;
  int64_t app_avail_ = 0;

  SimTime srtt_ = -1;
  SimTime rttvar_ = 0;
  SimTime rto_cur_;
  EventHandle rto_timer_;

  std::deque<SegRecord> outstanding_;
  uint64_t retransmits_ = 0;
  uint64_t fast_retransmits_ = 0;
  uint64_t rto_events_ = 0;
  uint64_t anomalous_acks_ = 0;
};

struct TcpReceiverConfig {
  bool delayed_ack = false;
  SimTime delack_timeout = msec(40);
  int64_t adv_window = 1 << 20;
};

// Destination-side reassembly: in-order data advances the cumulative ACK,
// out-of-order data is buffered and answered with a duplicate ACK, and a
// gap fill acknowledges everything buffered behind it at once.
class TcpReceiver {
 public:
  // emit(ack, window, is_dup)
  using AckFn = std::function<void(uint64_t, int64_t, bool)>;

  TcpReceiver(Engine& eng, NodeId node, TcpReceiverConfig cfg, AckFn emit_ack);

  void on_segment(uint64_t seq, uint32_t len);

  uint64_t recv_next() const { return recv_next_; }
  uint64_t delivered_bytes() const { return recv_next_; }
  uint64_t duplicate_bytes() const { return duplicate_bytes_; }
  uint64_t dupacks_sent() const { return dupacks_sent_; }
  int64_t buffered_bytes() const { return buffered_bytes_; }
  // Out-of-order holdings as [start, end) intervals, for audits.
  const std::map<uint64_t, uint64_t>& out_of_order() const { return buffered_; }

 private:
  void emit(bool dup);

  Engine& eng_;
  NodeId node_;
  TcpReceiverConfig cfg_;
  AckFn emit_ack_;
  uint64_t recv_next_ = 0;
  std::map<uint64_t, uint64_t> buffered_;  // start -> end
  int64_t buffered_bytes_ = 0;
  uint64_t duplicate_bytes_ = 0;
  uint64_t dupacks_sent_ = 0;
  uint64_t last_ack_sent_ = 0;
  int pending_acks_ = 0;
  EventHandle delack_timer_;
};

}  // namespace bapusim
