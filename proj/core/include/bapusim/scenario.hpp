#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "bapusim/access_point.hpp"
#include "bapusim/gateway.hpp"
#include "bapusim/packet.hpp"
#include "bapusim/units.hpp"

namespace bapusim {

enum class RttPreset : uint8_t { Ms32, Ms96, Ms192, Random2080 };

class ScenarioError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything a run needs, as parsed from a flat `key = value` scenario
// file. Field names in the file match the member names here.
struct Scenario {
  int n_aps = 7;
  Mode mode = Mode::Proactive;
  Proto proto = Proto::Tcp;
  Strategy strategy = Strategy::FcfsCapacity;
  RttPreset rtt_preset = RttPreset::Ms32;
  double monitor_loss = 0.0;     // P, per overhearing attempt
  double duration_s = 60.0;
  double warmup_s = 5.0;
  uint64_t seed = 1;
  Rate sender_rate = 0;          // bits/s of application payload; 0 = unlimited
  bool shaper_study = false;
  bool bapu = true;              // false: plain single-path run, no aggregation

  Rate uplink_rate = 2'000'000;
  Rate downlink_rate = 20'000'000;
  Rate wifi_rate = 54'000'000;
  double per_unicast_loss = 0.05;
  int64_t payload_size = 1350;
  int64_t queue_cap_bytes = 65536;
  int64_t sched_margin_bytes = 4096;
  bool tunnel_tcp = false;            // back each uplink with a real TCP pipe
  int64_t tunnel_path_queue_bytes = 16384;
  int buffer_cap_packets = 1024;
  int reorder_cap_segments = 256;
  int64_t adv_window = 4 << 20;
  int initial_cwnd_segments = 2;
  int initial_ssthresh_segments = 64;  // 0 = no ceiling until first loss
  bool delayed_ack = false;
  bool fast_recovery_inflation = true;
  double p_extra = 0.3;
  double fault_evict_prob = 0.0;
  uint16_t bapu_port = 5000;

  // Uplink-sharing study knobs.
  Rate background_floor = 500'000;
  Rate regular_rate = 1'500'000;
  Rate background_rate = 2'500'000;

  SimTime duration() const { return static_cast<SimTime>(duration_s * kUsPerSec); }
  SimTime warmup() const { return static_cast<SimTime>(warmup_s * kUsPerSec); }
  SimTime one_way_delay() const;  // from the RTT preset (fixed presets only)
  std::string label() const;
};

// Parses the flat scenario format: one `key = value` per line, `#` starts a
// comment. Unknown keys and malformed values are errors naming the field.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);
void validate(const Scenario& s);

const char* to_string(Mode m);
const char* to_string(Strategy s);
const char* to_string(RttPreset r);
const char* to_string(Proto p);

}  // namespace bapusim
