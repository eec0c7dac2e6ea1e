#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "bapusim/tcp_endpoint.hpp"
#include "bapusim/units.hpp"

namespace bapusim {

struct SchedLogRow {
  SimTime time = 0;
  uint16_t ipid = 0;
  uint16_t apid = 0;
  int n_reporters = 0;
};

// Raw counters and logs filled in while a simulation runs. Everything the
// summary, the CSV emitters, and the audit checks need comes from here.
struct Metrics {
  SimTime warmup_start = 0;
  SimTime window_end = 0;

  // Destination application accounting (duplicates excluded).
  int64_t app_bytes_total = 0;
  int64_t app_bytes_window = 0;
  int64_t dup_bytes_at_dest = 0;
  std::map<int64_t, int64_t> goodput_bins;  // second index -> payload bytes

  // Shaper study per-class delivery bins.
  std::map<int64_t, int64_t> regular_bins;
  std::map<int64_t, int64_t> background_bins;

  int64_t control_bytes = 0;  // register/report/schedule/nack wire bytes

  // Wireless.
  uint64_t wifi_packets = 0;
  uint64_t wifi_attempts = 0;
  uint64_t mac_failures = 0;
  SimTime wifi_busy_us = 0;

  // Sender TCP.
  std::vector<TcpTraceRecord> cwnd_trace;
  uint64_t retransmits = 0;
  uint64_t fast_retransmits = 0;
  uint64_t rto_events = 0;

  // AP / gateway protocol counters.
  uint64_t reports_sent = 0;
  uint64_t ap_duplicates = 0;
  uint64_t ap_buffer_drops = 0;
  uint64_t fault_evictions = 0;
  uint64_t tunnel_drops = 0;
  uint64_t nacks = 0;
  uint64_t reschedules = 0;
  uint64_t abandoned = 0;
  uint64_t late_reports = 0;
  uint64_t spoofed_acks = 0;
  uint64_t spoofed_dupacks = 0;
  uint64_t dropped_real_acks = 0;
  uint64_t nat_mismatches = 0;
  std::vector<SchedLogRow> sched_log;

  // Audit state: exactly-once delivery and spoofed-ACK safety.
  std::unordered_map<uint64_t, int> injected_uid_count;
  std::map<uint64_t, uint64_t> injected_intervals;  // merged [start, end)
  uint64_t last_spoofed_ack = 0;

  void record_delivery(SimTime t, int64_t payload_bytes);
  void record_injected_interval(uint64_t start, uint64_t end);
  bool injected_covers(uint64_t upto) const;
};

// One summary row per run.
struct MetricsRecord {
  double goodput_bps = 0;
  double efficiency = 0;
  double bin_mean_bps = 0;
  double bin_stddev_bps = 0;
  double mean_cwnd_segments = 0;  // over [warmup, end]
  uint64_t retransmits = 0;
  uint64_t fast_retransmits = 0;
  uint64_t rto_events = 0;
  int64_t control_bytes = 0;
  int64_t app_bytes = 0;
};

}  // namespace bapusim
