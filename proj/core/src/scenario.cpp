#include "bapusim/scenario.hpp"

#include <fstream>
#include <sstream>

namespace bapusim {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::Basic: return "basic";
    case Mode::Buffering: return "buffering";
    case Mode::Proactive: return "proactive";
  }
  return "?";
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::FcfsCapacity: return "fcfs_capacity";
    case Strategy::Modulo: return "modulo";
    case Strategy::ModuloRedundant: return "modulo_redundant";
  }
  return "?";
}

const char* to_string(RttPreset r) {
  switch (r) {
    case RttPreset::Ms32: return "32ms";
    case RttPreset::Ms96: return "96ms";
    case RttPreset::Ms192: return "192ms";
    case RttPreset::Random2080: return "random";
  }
  return "?";
}

const char* to_string(Proto p) { return p == Proto::Udp ? "udp" : "tcp"; }

SimTime Scenario::one_way_delay() const {
  switch (rtt_preset) {
    case RttPreset::Ms32: return msec(16);
    case RttPreset::Ms96: return msec(48);
    case RttPreset::Ms192: return msec(96);
    case RttPreset::Random2080: return msec(16);  // per-AP draw happens at setup
  }
  return msec(16);
}

std::string Scenario::label() const {
  std::ostringstream os;
  os << to_string(proto) << "-" << to_string(mode) << "-" << n_aps << "ap-"
     << to_string(rtt_preset) << "-P" << monitor_loss << "-s" << seed;
  if (!bapu) os << "-nobapu";
  if (shaper_study) os << "-shaper";
  return os.str();
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ScenarioError("invalid value '" + value + "' for field '" + key + "'");
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const ScenarioError&) {
    throw;
  } catch (...) {
    bad_value(key, value);
  }
}

int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    int64_t v = std::stoll(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const ScenarioError&) {
    throw;
  } catch (...) {
    bad_value(key, value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  bad_value(key, value);
}

// Rates accept a raw bits/s figure or the word "unlimited".
Rate parse_rate(const std::string& key, const std::string& value) {
  if (value == "unlimited") return 0;
  return parse_int(key, value);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ScenarioError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));

    if (key == "n_aps") s.n_aps = static_cast<int>(parse_int(key, value));
    else if (key == "mode") {
      if (value == "basic") s.mode = Mode::Basic;
      else if (value == "buffering") s.mode = Mode::Buffering;
      else if (value == "proactive") s.mode = Mode::Proactive;
      else bad_value(key, value);
    } else if (key == "proto") {
      if (value == "tcp") s.proto = Proto::Tcp;
      else if (value == "udp") s.proto = Proto::Udp;
      else bad_value(key, value);
    } else if (key == "strategy") {
      if (value == "fcfs_capacity") s.strategy = Strategy::FcfsCapacity;
      else if (value == "modulo") s.strategy = Strategy::Modulo;
      else if (value == "modulo_redundant") s.strategy = Strategy::ModuloRedundant;
      else bad_value(key, value);
    } else if (key == "rtt_preset") {
      if (value == "32ms") s.rtt_preset = RttPreset::Ms32;
      else if (value == "96ms") s.rtt_preset = RttPreset::Ms96;
      else if (value == "192ms") s.rtt_preset = RttPreset::Ms192;
      else if (value == "random") s.rtt_preset = RttPreset::Random2080;
      else bad_value(key, value);
    }
    else if (key == "monitor_loss") s.monitor_loss = parse_double(key, value);
    else if (key == "duration_s") s.duration_s = parse_double(key, value);
    else if (key == "warmup_s") s.warmup_s = parse_double(key, value);
    else if (key == "seed") s.seed = static_cast<uint64_t>(parse_int(key, value));
    else if (key == "sender_rate") s.sender_rate = parse_rate(key, value);
    else if (key == "shaper_study") s.shaper_study = parse_bool(key, value);
    else if (key == "bapu") s.bapu = parse_bool(key, value);
    else if (key == "uplink_rate") s.uplink_rate = parse_int(key, value);
    else if (key == "downlink_rate") s.downlink_rate = parse_int(key, value);
    else if (key == "wifi_rate") s.wifi_rate = parse_int(key, value);
    else if (key == "per_unicast_loss") s.per_unicast_loss = parse_double(key, value);
    else if (key == "payload_size") s.payload_size = parse_int(key, value);
    else if (key == "queue_cap_bytes") s.queue_cap_bytes = parse_int(key, value);
    else if (key == "sched_margin_bytes") s.sched_margin_bytes = parse_int(key, value);
    else if (key == "tunnel_tcp") s.tunnel_tcp = parse_bool(key, value);
    else if (key == "tunnel_path_queue_bytes") s.tunnel_path_queue_bytes = parse_int(key, value);
    else if (key == "buffer_cap_packets") s.buffer_cap_packets = static_cast<int>(parse_int(key, value));
    else if (key == "reorder_cap_segments") s.reorder_cap_segments = static_cast<int>(parse_int(key, value));
    else if (key == "adv_window") s.adv_window = parse_int(key, value);
    else if (key == "initial_cwnd_segments") s.initial_cwnd_segments = static_cast<int>(parse_int(key, value));
    else if (key == "initial_ssthresh_segments") s.initial_ssthresh_segments = static_cast<int>(parse_int(key, value));
    else if (key == "delayed_ack") s.delayed_ack = parse_bool(key, value);
    else if (key == "fast_recovery_inflation") s.fast_recovery_inflation = parse_bool(key, value);
    else if (key == "p_extra") s.p_extra = parse_double(key, value);
    else if (key == "fault_evict_prob") s.fault_evict_prob = parse_double(key, value);
    else if (key == "bapu_port") s.bapu_port = static_cast<uint16_t>(parse_int(key, value));
    else if (key == "background_floor") s.background_floor = parse_int(key, value);
    else if (key == "regular_rate") s.regular_rate = parse_int(key, value);
    else if (key == "background_rate") s.background_rate = parse_int(key, value);
    else throw ScenarioError("unknown field '" + key + "'");
  }
  validate(s);
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void validate(const Scenario& s) {
  if (s.n_aps < 1 || s.n_aps > 16) throw ScenarioError("field 'n_aps' must be in 1..16");
  if (s.monitor_loss < 0 || s.monitor_loss > 1)
    throw ScenarioError("field 'monitor_loss' must be a probability");
  if (s.per_unicast_loss < 0 || s.per_unicast_loss > 1)
    throw ScenarioError("field 'per_unicast_loss' must be a probability");
  if (s.p_extra < 0 || s.p_extra > 1)
    throw ScenarioError("field 'p_extra' must be a probability");
  if (s.fault_evict_prob < 0 || s.fault_evict_prob > 1)
    throw ScenarioError("field 'fault_evict_prob' must be a probability");
  if (s.duration_s <= 0) throw ScenarioError("field 'duration_s' must be positive");
  if (s.warmup_s < 0 || s.warmup_s >= s.duration_s)
    throw ScenarioError("field 'warmup_s' must be in [0, duration_s)");
  if (s.payload_size < 64 || s.payload_size > 1400)
    throw ScenarioError("field 'payload_size' must be in 64..1400");
  if (s.mode == Mode::Buffering && s.proto != Proto::Tcp)
    throw ScenarioError("field 'mode': buffering requires proto = tcp");
  if (s.strategy != Strategy::FcfsCapacity && s.mode != Mode::Basic)
    throw ScenarioError("field 'strategy': modulo strategies require mode = basic");
  if (!s.bapu && s.n_aps != 1)
    throw ScenarioError("field 'bapu': single-path runs require n_aps = 1");
  if (!s.bapu && s.mode != Mode::Basic)
    throw ScenarioError("field 'mode': single-path runs require mode = basic");
  if (s.uplink_rate <= 0 || s.downlink_rate <= 0 || s.wifi_rate <= 0)
    throw ScenarioError("link rates must be positive");
}

}  // namespace bapusim
