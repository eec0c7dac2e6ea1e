#pragma once

#include <deque>
#include <functional>
#include <variant>

#include "bapusim/engine.hpp"
#include "bapusim/framing.hpp"
#include "bapusim/packet.hpp"

namespace bapusim {

// Anything a backhaul pipe can carry: a framed tunnel message or a raw IP
// packet on the default path.
using LinkMessage = std::variant<TunnelMessage, Packet>;

int64_t link_message_wire_bytes(const LinkMessage& m);

struct TunnelConfig {
  Rate rate = 2'000'000;
  SimTime one_way_delay = msec(16);
  int64_t queue_cap_bytes = 65536;
};

// Reliable in-order rate-shaped pipe with a one-way propagation delay;
// models a long-lived TCP tunnel in steady state (plus the ISP shaper in
// front of it). Data messages are dropped when the queue is full; that
// surfaces upstream as capacity back-pressure in reports, never as
// reordering. Control messages bypass the cap: they coalesce into the
// tunnel byte stream, so the real system delays them rather than losing
// them.
class TunnelLink {
 public:
  using DeliverFn = std::function<void(LinkMessage&&)>;

  TunnelLink(Engine& eng, NodeId dst_node, TunnelConfig cfg, DeliverFn deliver)
      : eng_(eng), dst_(dst_node), cfg_(cfg), deliver_(std::move(deliver)) {}

  // Returns false when a capped message was dropped on overflow.
  bool enqueue(LinkMessage msg);

  // Bytes enqueued but not yet fully serialized.
  int64_t queue_occupancy() const;
  int64_t free_capacity() const;

  uint64_t drops() const { return drops_; }
  int64_t delivered_bytes() const { return delivered_bytes_; }
  const TunnelConfig& config() const { return cfg_; }

 private:
  Engine& eng_;
  NodeId dst_;
  TunnelConfig cfg_;
  DeliverFn deliver_;
  SimTime busy_until_ = 0;
  // (serialization finish time, wire bytes) of in-flight queue entries.
  mutable std::deque<std::pair<SimTime, int64_t>> in_queue_;
  uint64_t drops_ = 0;
  int64_t delivered_bytes_ = 0;
};

enum class TrafficClass : uint8_t { Regular = 0, Background = 1 };

struct ShaperConfig {
  Rate rate = 2'000'000;
  Rate background_floor = 500'000;
  SimTime interval = msec(10);
  SimTime one_way_delay = 0;
  int64_t queue_cap_bytes = 131072;  // per class
};

// Two-class priority shaper: regular traffic drains first, but background
// is always granted at least its floor rate and absorbs whatever regular
// leaves unused. Tokens replenish every interval and carry over up to one
// extra interval so message sizes that do not divide the per-interval
// budget still reach the nominal rate.
class PriorityShaperLink {
 public:
  using DeliverFn = std::function<void(TrafficClass, LinkMessage&&)>;

  PriorityShaperLink(Engine& eng, NodeId dst_node, ShaperConfig cfg, DeliverFn deliver)
      : eng_(eng), dst_(dst_node), cfg_(cfg), deliver_(std::move(deliver)) {}

  bool enqueue(TrafficClass cls, LinkMessage msg);

  int64_t served_bytes(TrafficClass cls) const {
    return served_[static_cast<int>(cls)];
  }
  int64_t backlog_bytes(TrafficClass cls) const {
    return backlog_[static_cast<int>(cls)];
  }
  uint64_t drops() const { return drops_; }

 private:
  struct Entry {
    LinkMessage msg;
    int64_t bytes;
  };

  void ensure_tick();
  void drain_tick();
  int64_t serve_from(int cls, int64_t budget, SimTime tick_start);

  Engine& eng_;
  NodeId dst_;
  ShaperConfig cfg_;
  DeliverFn deliver_;
  std::deque<Entry> queues_[2];
  int64_t backlog_[2] = {0, 0};
  int64_t served_[2] = {0, 0};
  int64_t floor_tokens_ = 0;
  int64_t shared_tokens_ = 0;
  int64_t tick_sent_ = 0;
  bool tick_armed_ = false;
  SimTime next_tick_ = 0;
  uint64_t drops_ = 0;
};

}  // namespace bapusim
