#include "bapusim/metrics.hpp"

namespace bapusim {

void Metrics::record_delivery(SimTime t, int64_t payload_bytes) {
  app_bytes_total += payload_bytes;
  if (t >= warmup_start && t < window_end) {
    app_bytes_window += payload_bytes;
    goodput_bins[t / kUsPerSec] += payload_bytes;
  }
}

void Metrics::record_injected_interval(uint64_t start, uint64_t end) {
  if (end <= start) return;
  auto it = injected_intervals.lower_bound(start);
  if (it != injected_intervals.begin()) {
    auto prev = std::prev(it);
    if (prev->second >= start) it = prev;
  }
  while (it != injected_intervals.end() && it->first <= end) {
    start = std::min(start, it->first);
    end = std::max(end, it->second);
    it = injected_intervals.erase(it);
  }
  injected_intervals[start] = end;
}

bool Metrics::injected_covers(uint64_t upto) const {
  if (upto == 0) return true;
  auto it = injected_intervals.find(0);
  return it != injected_intervals.end() && it->second >= upto;
}

}  // namespace bapusim
