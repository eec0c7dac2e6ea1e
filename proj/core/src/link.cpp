#include "bapusim/link.hpp"

#include <algorithm>
#include <memory>

namespace bapusim {

namespace {
constexpr int64_t kMaxWireBytes = 1600;
}

int64_t link_message_wire_bytes(const LinkMessage& m) {
  if (const auto* t = std::get_if<TunnelMessage>(&m)) return t->wire_bytes();
  return default_path_wire_bytes(std::get<Packet>(m));
}

bool TunnelLink::enqueue(LinkMessage msg) {
  int64_t bytes = link_message_wire_bytes(msg);
  // Data fills the queue; control and handshake traffic coalesces into the
  // stream and is delayed rather than dropped.
  bool capped;
  if (const auto* t = std::get_if<TunnelMessage>(&msg)) {
    capped = t->type == MsgType::Data;
  } else {
    capped = std::get<Packet>(msg).payload_len > 0;
  }
  if (capped && queue_occupancy() + bytes > cfg_.queue_cap_bytes) {
    ++drops_;
    return false;
  }
  SimTime start = std::max(eng_.now(), busy_until_);
  busy_until_ = start + serialization_us(bytes, cfg_.rate);
  in_queue_.emplace_back(busy_until_, bytes);
  SimTime deliver_at = busy_until_ + cfg_.one_way_delay;
  auto carried = std::make_shared<LinkMessage>(std::move(msg));
  eng_.schedule(deliver_at, dst_, EventKind::TunnelDelivery, [this, carried] {
    delivered_bytes_ += link_message_wire_bytes(*carried);
    deliver_(std::move(*carried));
  });
  return true;
}

int64_t TunnelLink::queue_occupancy() const {
  SimTime now = eng_.now();
  while (!in_queue_.empty() && in_queue_.front().first <= now) in_queue_.pop_front();
  int64_t total = 0;
  for (const auto& [_, bytes] : in_queue_) total += bytes;
  return total;
}

int64_t TunnelLink::free_capacity() const {
  return std::max<int64_t>(0, cfg_.queue_cap_bytes - queue_occupancy());
}

bool PriorityShaperLink::enqueue(TrafficClass cls, LinkMessage msg) {
  int idx = static_cast<int>(cls);
  int64_t bytes = link_message_wire_bytes(msg);
  if (backlog_[idx] + bytes > cfg_.queue_cap_bytes) {
    ++drops_;
    return false;
  }
  queues_[idx].push_back(Entry{std::move(msg), bytes});
  backlog_[idx] += bytes;
  ensure_tick();
  return true;
}

void PriorityShaperLink::ensure_tick() {
  if (tick_armed_) return;
  tick_armed_ = true;
  if (next_tick_ < eng_.now()) {
    // Idle gap: restart the replenishment grid at the current time and
    // forfeit tokens from idle intervals.
    next_tick_ = eng_.now();
    floor_tokens_ = 0;
    shared_tokens_ = 0;
  }
  eng_.schedule(next_tick_, dst_, EventKind::TimerExpiry, [this] { drain_tick(); });
}

void PriorityShaperLink::drain_tick() {
  tick_armed_ = false;
  SimTime tick_start = next_tick_;
  next_tick_ = tick_start + cfg_.interval;

  int64_t floor_budget = cfg_.background_floor * cfg_.interval / (8 * kUsPerSec);
  // Whole messages leave the bucket, so the guarantee lane runs a small
  // surplus; otherwise a window ending just before a service slot dips a
  // message-quantum below the configured floor.
  floor_budget += floor_budget / 32 + 4;
  int64_t shared_budget =
      (cfg_.rate - cfg_.background_floor) * cfg_.interval / (8 * kUsPerSec);
  // Carry-over must cover at least one full frame or big messages starve.
  int64_t min_burst = 2 * kMaxWireBytes;
  floor_tokens_ = std::min(floor_tokens_ + floor_budget,
                           std::max(2 * floor_budget, min_burst));
  shared_tokens_ = std::min(shared_tokens_ + shared_budget,
                            std::max(2 * shared_budget, min_burst));
  tick_sent_ = 0;

  constexpr int kBg = static_cast<int>(TrafficClass::Background);
  constexpr int kReg = static_cast<int>(TrafficClass::Regular);

  // Background first up to its guarantee, regular takes the rest, then each
  // class absorbs whatever the other left idle.
  floor_tokens_ -= serve_from(kBg, floor_tokens_, tick_start);
  shared_tokens_ -= serve_from(kReg, shared_tokens_, tick_start);
  shared_tokens_ -= serve_from(kBg, shared_tokens_, tick_start);
  floor_tokens_ -= serve_from(kReg, floor_tokens_, tick_start);

  if (!queues_[kBg].empty() || !queues_[kReg].empty()) ensure_tick();
}

int64_t PriorityShaperLink::serve_from(int cls, int64_t budget, SimTime tick_start) {
  int64_t used = 0;
  auto& q = queues_[cls];
  while (!q.empty() && q.front().bytes <= budget - used) {
    Entry e = std::move(q.front());
    q.pop_front();
    used += e.bytes;
    backlog_[cls] -= e.bytes;
    served_[cls] += e.bytes;
    tick_sent_ += e.bytes;
    SimTime out = tick_start + serialization_us(tick_sent_, cfg_.rate) + cfg_.one_way_delay;
    out = std::max(out, eng_.now());
    auto carried = std::make_shared<LinkMessage>(std::move(e.msg));
    auto tc = static_cast<TrafficClass>(cls);
    eng_.schedule(out, dst_, EventKind::TunnelDelivery,
                  [this, tc, carried] { deliver_(tc, std::move(*carried)); });
  }
  return used;
}

}  // namespace bapusim
