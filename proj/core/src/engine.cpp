#include "bapusim/engine.hpp"

#include <algorithm>
#include <string>

namespace bapusim {

EventHandle Engine::schedule(SimTime fire_time, NodeId target, EventKind kind,
                             std::function<void()> action) {
  if (fire_time < now_) {
    throw SimClockError("schedule at t=" + std::to_string(fire_time) +
                        " is in the past (now=" + std::to_string(now_) + ")");
  }
  uint64_t seq = next_seq_++;
  heap_.push_back(Event{fire_time, seq, target, kind, std::move(action)});
  std::push_heap(heap_.begin(), heap_.end(), After{});
  pending_.insert(seq);
  ++n_scheduled_;
  return EventHandle{seq};
}

bool Engine::cancel(EventHandle h) {
  if (!h.valid() || pending_.erase(h.id) == 0) return false;
  cancelled_.insert(h.id);
  ++n_cancelled_;
  return true;
}

RunSummary Engine::run_until(SimTime end_time) {
  while (!heap_.empty() && heap_.front().t <= end_time) {
    std::pop_heap(heap_.begin(), heap_.end(), After{});
    Event ev = std::move(heap_.back());
    heap_.pop_back();
    if (cancelled_.erase(ev.seq) > 0) continue;
    pending_.erase(ev.seq);
    now_ = ev.t;
    ++n_fired_;
    ++fired_per_node_[ev.target];
    ev.action();
  }
  now_ = std::max(now_, end_time);

  RunSummary s;
  s.end_time = now_;
  s.scheduled = n_scheduled_;
  s.fired = n_fired_;
  s.cancelled = n_cancelled_;
  s.pending = pending_.size();
  s.fired_per_node = fired_per_node_;
  return s;
}

}  // namespace bapusim
