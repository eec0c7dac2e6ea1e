#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "bapusim/units.hpp"

namespace bapusim {

enum class EventKind : uint8_t {
  FrameArrival,
  TimerExpiry,
  TunnelDelivery,
  AppSend,
  Control,
};

// Opaque reference to a pending event; cancellable until it fires.
struct EventHandle {
  uint64_t id = 0;
  bool valid() const { return id != 0; }
};

struct RunSummary {
  SimTime end_time = 0;
  uint64_t scheduled = 0;
  uint64_t fired = 0;
  uint64_t cancelled = 0;
  uint64_t pending = 0;
  std::map<NodeId, uint64_t> fired_per_node;
};

// Thrown when a caller schedules before the current virtual time.
class SimClockError : public std::logic_error {
  using std::logic_error::logic_error;
};

// Single-threaded discrete-event core. Events fire in nondecreasing
// fire-time order; equal times break ties by insertion order. Instances
// share nothing, so a harness may run many engines concurrently.
class Engine {
 public:
  SimTime now() const { return now_; }

  EventHandle schedule(SimTime fire_time, NodeId target, EventKind kind,
                       std::function<void()> action);

  // True if the event was still pending and is now cancelled.
  bool cancel(EventHandle h);

  // Processes every event with fire_time <= end_time, then advances the
  // clock to end_time. An empty queue just advances the clock.
  RunSummary run_until(SimTime end_time);

  uint64_t scheduled_count() const { return n_scheduled_; }
  uint64_t fired_count() const { return n_fired_; }
  uint64_t cancelled_count() const { return n_cancelled_; }
  uint64_t pending_count() const { return pending_.size(); }

 private:
  struct Event {
    SimTime t;
    uint64_t seq;
    NodeId target;
    EventKind kind;
    std::function<void()> action;
  };
  struct After {
    bool operator()(const Event& a, const Event& b) const {
      return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }
  };

  std::vector<Event> heap_;
  std::unordered_set<uint64_t> pending_;
  std::unordered_set<uint64_t> cancelled_;
  std::map<NodeId, uint64_t> fired_per_node_;
  SimTime now_ = 0;
  uint64_t next_seq_ = 1;
  uint64_t n_scheduled_ = 0;
  uint64_t n_fired_ = 0;
  uint64_t n_cancelled_ = 0;
};

}  // namespace bapusim
