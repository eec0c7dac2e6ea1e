// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Run through ctest or directly; ~2-4 minutes on a laptop.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bapusim/experiments.hpp"
#include "bapusim/simulation.hpp"

using namespace bapusim;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
  std::printf("%s  criterion-%d %-22s %s\n", pass ? "PASS" : "FAIL", criterion, name,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

constexpr int kSeeds = 3;
constexpr double kDuration = 60.0;

Scenario tcp_base(Mode mode, int n_aps) {
  Scenario sc;
  sc.proto = Proto::Tcp;
  sc.mode = mode;
  sc.n_aps = n_aps;
  sc.duration_s = kDuration;
  sc.warmup_s = 5.0;
  return sc;
}

struct SeedStats {
  double goodput = 0;
  double efficiency = 0;
  double mean_cwnd = 0;
  double bin_stddev = 0;
  uint64_t fast_retransmits = 0;
  bool spoof_safe = true;
};

SeedStats run_seeds(Scenario sc) {
  SeedStats out;
  for (int k = 0; k < kSeeds; ++k) {
    sc.seed = 1 + k;
    RunOutput r = run_scenario(sc);
    out.goodput += r.record.goodput_bps / kSeeds;
    out.efficiency += r.record.efficiency / kSeeds;
    out.mean_cwnd += r.record.mean_cwnd_segments / kSeeds;
    out.bin_stddev += r.record.bin_stddev_bps / kSeeds;
    out.fast_retransmits += r.record.fast_retransmits;
    if (r.metrics->last_spoofed_ack > 0 &&
        !r.metrics->injected_covers(r.metrics->last_spoofed_ack)) {
      out.spoof_safe = false;
    }
  }
  return out;
}

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

// ---- criteria ----

void criterion1_udp_linear() {
  bool pass = true;
  std::string detail;
  for (int n = 1; n <= 7; ++n) {
    Scenario sc;
    sc.proto = Proto::Udp;
    sc.mode = Mode::Basic;
    sc.n_aps = n;
    sc.monitor_loss = 0.0;
    sc.duration_s = kDuration;
    sc.warmup_s = 5.0;
    SeedStats s = run_seeds(sc);
    double target = n * theoretical_max_bps(Proto::Udp, true, sc.uplink_rate, 1350);
    bool ok = s.efficiency >= 0.90 && std::abs(s.goodput - target) <= 0.10 * target;
    pass = pass && ok;
    if (n == 7) {
      detail = fmt("n=7: %.2f Mbps vs %.2f linear, min-eff across n recorded",
                   s.goodput / 1e6, target / 1e6);
    }
  }
  report(1, "udp-linear", pass, detail);
}

std::map<int, SeedStats> g_basic_by_n;

void criterion2_basic_collapse() {
  for (int n = 3; n <= 7; ++n) g_basic_by_n[n] = run_seeds(tcp_base(Mode::Basic, n));
  bool decreasing = true;
  for (int n = 4; n <= 7; ++n) {
    if (g_basic_by_n[n].efficiency >= g_basic_by_n[n - 1].efficiency) decreasing = false;
  }
  bool pass = g_basic_by_n[7].efficiency <= 0.60 && decreasing;
  report(2, "basic-tcp-collapse", pass,
         fmt("eff(3..7)=%.2f>...>%.2f, eff(7)<=0.60 %s", g_basic_by_n[3].efficiency,
             g_basic_by_n[7].efficiency) +
             (decreasing ? ", strictly decreasing" : ", NOT monotone"));
}

SeedStats g_pro7;

void criterion3_proactive_recovery() {
  g_pro7 = run_seeds(tcp_base(Mode::Proactive, 7));
  double improvement = g_pro7.goodput / g_basic_by_n[7].goodput - 1.0;
  bool pass = g_pro7.efficiency >= 0.85 && improvement >= 0.50;
  report(3, "proactive-recovery", pass,
         fmt("eff=%.3f (>=0.85), %.2f Mbps, +%.0f%% over basic (>=50%%)",
             g_pro7.efficiency, g_pro7.goodput / 1e6, improvement * 100));
}

void criterion4_buffering_strawman() {
  // The comparison runs heterogeneous backhaul latency with TCP-backed
  // tunnels, the sensitivity configuration where tunnel stalls surface.
  Scenario base = tcp_base(Mode::Basic, 7);
  base.rtt_preset = RttPreset::Random2080;
  base.tunnel_tcp = true;
  SeedStats basic = run_seeds(base);
  bool pass = true;
  std::string detail = fmt("basic=%.2f Mbps vs", basic.goodput / 1e6);
  for (int cap : {64, 256, 1024}) {
    Scenario sc = base;
    sc.mode = Mode::Buffering;
    sc.reorder_cap_segments = cap;
    SeedStats buf = run_seeds(sc);
    pass = pass && buf.goodput <= basic.goodput;
    detail += fmt(" %.2f@", buf.goodput / 1e6) + std::to_string(cap);
  }
  report(4, "buffering-strawman", pass, detail);
}

void criterion5_loss_robustness() {
  std::map<double, SeedStats> by_p;
  for (double p : {0.0, 0.2, 0.4, 0.6}) {
    Scenario sc = tcp_base(Mode::Proactive, 7);
    sc.monitor_loss = p;
    by_p[p] = run_seeds(sc);
  }
  bool within = true;
  for (double p : {0.2, 0.4, 0.6}) {
    if (by_p[p].goodput < 0.90 * by_p[0.0].goodput) within = false;
  }
  bool high_ok = by_p[0.6].goodput >= 0.90 * by_p[0.2].goodput;
  report(5, "loss-robustness", within && high_ok,
         fmt("goodput P=0/.2/.4/.6: %.2f/%.2f/%.2f/%.2f Mbps", by_p[0.0].goodput / 1e6,
             by_p[0.2].goodput / 1e6, by_p[0.4].goodput / 1e6,
             by_p[0.6].goodput / 1e6));
}

void criterion6_cwnd_evidence() {
  double cwnd_ratio = g_pro7.mean_cwnd > 0
                          ? g_pro7.mean_cwnd / g_basic_by_n[7].mean_cwnd
                          : 0;
  uint64_t pro_fr = std::max<uint64_t>(g_pro7.fast_retransmits, 1);
  bool pass = g_pro7.mean_cwnd >= 3 * g_basic_by_n[7].mean_cwnd &&
              g_basic_by_n[7].fast_retransmits >= 10 * pro_fr;
  report(6, "cwnd-mechanism", pass,
         fmt("mean cwnd %.0f vs %.0f segs (%.1fx), fast-retransmits %.0f vs %.0f",
             g_pro7.mean_cwnd, g_basic_by_n[7].mean_cwnd, cwnd_ratio,
             static_cast<double>(g_basic_by_n[7].fast_retransmits),
             static_cast<double>(g_pro7.fast_retransmits)));
}

void criterion7_streaming_stability() {
  Scenario fixed = tcp_base(Mode::Proactive, 7);
  fixed.sender_rate = 11'000'000;
  fixed.seed = 1;
  RunOutput f = run_scenario(fixed);
  Scenario unlimited = fixed;
  unlimited.sender_rate = 0;
  RunOutput u = run_scenario(unlimited);
  bool pass = f.record.bin_stddev_bps < 0.5 * u.record.bin_stddev_bps;
  report(7, "streaming-stability", pass,
         fmt("1s-bin stddev %.0f kbps (11 Mbps fixed) vs %.0f kbps (unlimited)",
             f.record.bin_stddev_bps / 1e3, u.record.bin_stddev_bps / 1e3));
}

void criterion8_shaper() {
  Scenario sc;
  sc.shaper_study = true;
  sc.duration_s = 60;
  RunOutput study = run_scenario(sc);
  Scenario baseline = sc;
  baseline.background_rate = 0;
  RunOutput base = run_scenario(baseline);

  auto bits = [](const std::map<int64_t, int64_t>& bins, int64_t s) {
    auto it = bins.find(s);
    return it == bins.end() ? int64_t{0} : it->second * 8;
  };
  // Regular traffic occupies [20, 40); background is backlogged throughout.
  double bg_min = 1e18, reg_active = 0, reg_base = 0, bg_before = 0, bg_after = 0;
  int n_active = 0, n_before = 0, n_after = 0;
  for (int64_t s = 1; s < 59; ++s) {
    double bg = static_cast<double>(bits(study.metrics->background_bins, s));
    double rg = static_cast<double>(bits(study.metrics->regular_bins, s));
    if (s >= 20 && s < 40) {
      bg_min = std::min(bg_min, bg);
      reg_active += rg;
      reg_base += static_cast<double>(bits(base.metrics->regular_bins, s));
      ++n_active;
    } else if (s < 20) {
      bg_before += bg;
      ++n_before;
    } else if (s >= 42) {
      bg_after += bg;
      ++n_after;
    }
  }
  reg_active /= n_active;
  reg_base /= n_active;
  bg_before /= n_before;
  bg_after /= n_after;
  bool floor_ok = bg_min >= 490'000;
  bool reg_ok = std::abs(reg_active - reg_base) <= 0.05 * reg_base;
  bool reclaim_ok = bg_after >= 0.95 * bg_before;
  report(8, "uplink-sharing-shaper", floor_ok && reg_ok && reclaim_ok,
         fmt("bg floor min %.0f kbps, regular %.0f vs %.0f kbps, reclaim %.0f%%",
             bg_min / 1e3, reg_active / 1e3, reg_base / 1e3,
             100 * bg_after / bg_before));
}

// ---- criterion 9: property suites ----

void property_exactly_once() {
  bool pass = true;
  uint64_t total_packets = 0;
  for (int seed = 1; seed <= 20; ++seed) {
    Scenario sc;
    sc.proto = Proto::Udp;
    sc.mode = Mode::Basic;
    sc.n_aps = 5;
    sc.duration_s = 10;  // ~10^4 datagrams
    sc.warmup_s = 1;
    sc.monitor_loss = 0.3;
    sc.fault_evict_prob = 0.15;
    sc.seed = static_cast<uint64_t>(seed);
    Simulation sim(sc);
    sim.run();
    const Metrics& m = sim.metrics();
    for (const auto& [uid, count] : m.injected_uid_count) {
      if (count != 1) pass = false;
    }
    if (m.injected_uid_count.size() != sim.udp_packets_sent()) pass = false;
    total_packets += sim.udp_packets_sent();
  }
  report(9, "exactly-once", pass,
         fmt("%.0f packets across 20 fault-injected seeds, all delivered once",
             static_cast<double>(total_packets)));
}

void property_spoof_safety() {
  bool pass = g_pro7.spoof_safe;
  for (double evict : {0.05, 0.15}) {
    Scenario sc = tcp_base(Mode::Proactive, 5);
    sc.duration_s = 15;
    sc.monitor_loss = 0.4;
    sc.fault_evict_prob = evict;
    SeedStats s = run_seeds(sc);
    pass = pass && s.spoof_safe;
  }
  report(9, "spoofed-ack-safety", pass,
         "injected byte set covers every spoofed-acked byte at session end");
}

void property_reno_oracle() {
  // Single lossless shaped path; the advertised window stays below the
  // queue headroom so nothing drops and the trace is pure slow start plus
  // congestion avoidance. Replay the trace against the Reno recurrence.
  Scenario sc;
  sc.proto = Proto::Tcp;
  sc.mode = Mode::Basic;
  sc.bapu = false;
  sc.n_aps = 1;
  sc.per_unicast_loss = 0.0;
  sc.adv_window = 36 * 1350;
  sc.duration_s = 60;
  sc.warmup_s = 5;
  RunOutput r = run_scenario(sc);

  bool match = r.record.retransmits == 0 && r.record.fast_retransmits == 0 &&
               r.record.rto_events == 0;
  double mss = 1350;
  double cwnd = sc.initial_cwnd_segments * mss;
  double ssthresh = sc.initial_ssthresh_segments * mss;
  for (const TcpTraceRecord& rec : r.metrics->cwnd_trace) {
    if (rec.tag != TcpTraceRecord::Tag::Ack) continue;
    cwnd += cwnd < ssthresh ? mss : std::floor(mss * mss / cwnd);
    if (std::abs(rec.cwnd_segments - cwnd / mss) > 1e-9) match = false;
  }
  double ceiling = theoretical_max_bps(Proto::Tcp, false, sc.uplink_rate, 1350);
  bool goodput_ok = std::abs(r.record.goodput_bps - ceiling) <= 0.02 * ceiling;
  report(9, "reno-oracle", match && goodput_ok,
         fmt("lossless trace matches recurrence, goodput %.3f vs %.3f Mbps ceiling",
             r.record.goodput_bps / 1e6, ceiling / 1e6));
}

void property_determinism() {
  Scenario sc = tcp_base(Mode::Proactive, 7);
  sc.duration_s = 10;
  sc.monitor_loss = 0.2;
  RunOutput a = run_scenario(sc);
  RunOutput b = run_scenario(sc);
  namespace fs = std::filesystem;
  fs::create_directories("acceptance_out/a");
  fs::create_directories("acceptance_out/b");
  write_run_csvs(a, "acceptance_out/a");
  write_run_csvs(b, "acceptance_out/b");
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  bool pass = true;
  for (const char* f : {"summary.csv", "timeseries.csv", "cwnd.csv", "sched.csv"}) {
    if (slurp(std::string("acceptance_out/a/") + f) !=
        slurp(std::string("acceptance_out/b/") + f)) {
      pass = false;
    }
  }
  report(9, "determinism", pass, "repeated (scenario, seed) gives byte-identical CSVs");
}

void property_theoretical_max() {
  auto mbps2 = [](double bps) { return std::round(bps / 1e4) / 100.0; };
  bool pass = mbps2(theoretical_max_bps(Proto::Udp, false, 2'000'000, 1350)) == 1.94 &&
              mbps2(theoretical_max_bps(Proto::Udp, true, 2'000'000, 1350)) == 1.82 &&
              mbps2(theoretical_max_bps(Proto::Tcp, false, 2'000'000, 1350)) == 1.90 &&
              mbps2(theoretical_max_bps(Proto::Tcp, true, 2'000'000, 1350)) == 1.80;
  report(9, "theoretical-max-table", pass, "1.94 / 1.82 / 1.90 / 1.80 Mbps reproduced");
}

}  // namespace

int main() {
  std::printf("BaPu simulator acceptance suite (%d seeds per point, %.0f s runs)\n",
              kSeeds, kDuration);
  criterion1_udp_linear();
  criterion2_basic_collapse();
  criterion3_proactive_recovery();
  criterion4_buffering_strawman();
  criterion5_loss_robustness();
  criterion6_cwnd_evidence();
  criterion7_streaming_stability();
  criterion8_shaper();
  property_exactly_once();
  property_spoof_safety();
  property_reno_oracle();
  property_determinism();
  property_theoretical_max();
  std::printf("%s (%d failure%s)\n", g_failures == 0 ? "ALL PASS" : "FAILURES",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures == 0 ? 0 : 1;
}
