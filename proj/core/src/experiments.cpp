#include "bapusim/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "bapusim/simulation.hpp"

namespace bapusim {

namespace fs = std::filesystem;

double efficiency_denominator_bps(const Scenario& sc) {
  return sc.n_aps *
         theoretical_max_bps(sc.proto, sc.bapu, sc.uplink_rate, sc.payload_size);
}

MetricsRecord summarize(const Scenario& sc, const Metrics& m) {
  MetricsRecord r;
  double window_s = sc.duration_s - sc.warmup_s;
  r.app_bytes = m.app_bytes_window;
  r.goodput_bps = window_s > 0 ? m.app_bytes_window * 8.0 / window_s : 0.0;
  double denom = efficiency_denominator_bps(sc);
  r.efficiency = denom > 0 ? r.goodput_bps / denom : 0.0;

  // Per-second goodput over whole seconds inside the window, zeros included.
  int64_t first_s = static_cast<int64_t>(sc.warmup_s);
  int64_t last_s = static_cast<int64_t>(sc.duration_s);
  int64_t n_bins = last_s - first_s;
  if (n_bins > 0) {
    double sum = 0, sum2 = 0;
    for (int64_t s = first_s; s < last_s; ++s) {
      auto it = m.goodput_bins.find(s);
      double bits = it == m.goodput_bins.end() ? 0.0 : it->second * 8.0;
      sum += bits;
      sum2 += bits * bits;
    }
    r.bin_mean_bps = sum / n_bins;
    double var = sum2 / n_bins - r.bin_mean_bps * r.bin_mean_bps;
    r.bin_stddev_bps = var > 0 ? std::sqrt(var) : 0.0;
  }

  // Time-weighted congestion window over the measurement window.
  if (!m.cwnd_trace.empty()) {
    double weighted = 0;
    double total = 0;
    SimTime window_start = sc.warmup();
    SimTime window_end = sc.duration();
    for (size_t i = 0; i < m.cwnd_trace.size(); ++i) {
      SimTime t0 = std::max(m.cwnd_trace[i].time, window_start);
      SimTime t1 = i + 1 < m.cwnd_trace.size() ? m.cwnd_trace[i + 1].time : window_end;
      t1 = std::min(t1, window_end);
      if (t1 <= t0) continue;
      weighted += m.cwnd_trace[i].cwnd_segments * static_cast<double>(t1 - t0);
      total += static_cast<double>(t1 - t0);
    }
    if (total > 0) r.mean_cwnd_segments = weighted / total;
  }

  r.retransmits = m.retransmits;
  r.fast_retransmits = m.fast_retransmits;
  r.rto_events = m.rto_events;
  r.control_bytes = m.control_bytes;
  return r;
}

RunOutput run_scenario(const Scenario& sc) {
  Simulation sim(sc);
  sim.run();
  RunOutput out;
  out.scenario = sc;
  out.record = summarize(sc, sim.metrics());
  out.metrics = std::make_shared<Metrics>(std::move(sim.release_metrics()));
  return out;
}

std::vector<std::string> sweep_axes() {
  return {"n_aps", "rtt", "loss", "strategy", "mode"};
}

std::vector<RunOutput> sweep(const std::string& axis, const Scenario& base) {
  std::vector<Scenario> points;
  if (axis == "n_aps") {
    for (int n = 1; n <= 7; ++n) {
      Scenario s = base;
      s.n_aps = n;
      points.push_back(s);
    }
  } else if (axis == "rtt") {
    for (RttPreset p : {RttPreset::Ms32, RttPreset::Ms96, RttPreset::Ms192,
                        RttPreset::Random2080}) {
      Scenario s = base;
      s.rtt_preset = p;
      points.push_back(s);
    }
  } else if (axis == "loss") {
    for (double p : {0.0, 0.2, 0.4, 0.6}) {
      Scenario s = base;
      s.monitor_loss = p;
      points.push_back(s);
    }
  } else if (axis == "strategy") {
    for (Strategy st : {Strategy::FcfsCapacity, Strategy::Modulo,
                        Strategy::ModuloRedundant}) {
      Scenario s = base;
      s.strategy = st;
      if (st != Strategy::FcfsCapacity) s.mode = Mode::Basic;
      points.push_back(s);
    }
  } else if (axis == "mode") {
    for (Mode m : {Mode::Basic, Mode::Buffering, Mode::Proactive}) {
      Scenario s = base;
      s.mode = m;
      if (m == Mode::Buffering && s.proto != Proto::Tcp) continue;
      points.push_back(s);
    }
  } else {
    throw ScenarioError("unknown sweep axis '" + axis + "'");
  }
  std::vector<RunOutput> out;
  out.reserve(points.size());
  for (const Scenario& s : points) out.push_back(run_scenario(s));
  return out;
}

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

}  // namespace

void write_summary_csv(const std::string& path, const std::vector<RunOutput>& runs) {
  std::ofstream out(path);
  out << "label,proto,mode,strategy,n_aps,rtt_preset,monitor_loss,seed,duration_s,"
         "goodput_bps,efficiency,bin_mean_bps,bin_stddev_bps,mean_cwnd_segments,"
         "retransmits,fast_retransmits,rto_events,control_bytes,app_bytes\n";
  for (const RunOutput& r : runs) {
    const Scenario& sc = r.scenario;
    const MetricsRecord& m = r.record;
    out << sc.label() << ',' << to_string(sc.proto) << ',' << to_string(sc.mode) << ','
        << to_string(sc.strategy) << ',' << sc.n_aps << ',' << to_string(sc.rtt_preset)
        << ',' << fmt("%.2f", sc.monitor_loss) << ',' << sc.seed << ','
        << fmt("%.1f", sc.duration_s) << ',' << fmt("%.1f", m.goodput_bps) << ','
        << fmt("%.4f", m.efficiency) << ',' << fmt("%.1f", m.bin_mean_bps) << ','
        << fmt("%.1f", m.bin_stddev_bps) << ',' << fmt("%.2f", m.mean_cwnd_segments)
        << ',' << m.retransmits << ',' << m.fast_retransmits << ',' << m.rto_events
        << ',' << m.control_bytes << ',' << m.app_bytes << '\n';
  }
}

void write_timeseries_csv(const std::string& path, const Scenario& sc, const Metrics& m) {
  std::ofstream out(path);
  if (sc.shaper_study) {
    out << "time_s,regular_bps,background_bps\n";
    int64_t last = static_cast<int64_t>(sc.duration_s);
    for (int64_t s = 0; s < last; ++s) {
      auto reg = m.regular_bins.find(s);
      auto bg = m.background_bins.find(s);
      out << s << ',' << (reg == m.regular_bins.end() ? 0 : reg->second * 8) << ','
          << (bg == m.background_bins.end() ? 0 : bg->second * 8) << '\n';
    }
    return;
  }
  out << "time_s,goodput_bps\n";
  int64_t first = static_cast<int64_t>(sc.warmup_s);
  int64_t last = static_cast<int64_t>(sc.duration_s);
  for (int64_t s = first; s < last; ++s) {
    auto it = m.goodput_bins.find(s);
    out << s << ',' << (it == m.goodput_bins.end() ? 0 : it->second * 8) << '\n';
  }
}

void write_cwnd_csv(const std::string& path, const Metrics& m) {
  std::ofstream out(path);
  out << "time_us,cwnd,ssthresh,retransmits,event_tag\n";
  for (const TcpTraceRecord& r : m.cwnd_trace) {
    out << r.time << ',' << fmt("%.2f", r.cwnd_segments) << ','
        << fmt("%.2f", r.ssthresh_segments) << ',' << r.retransmits << ','
        << to_string(r.tag) << '\n';
  }
}

void write_sched_csv(const std::string& path, const Metrics& m) {
  std::ofstream out(path);
  out << "time_us,ipid,chosen_apid,n_reporters\n";
  for (const SchedLogRow& r : m.sched_log) {
    out << r.time << ',' << r.ipid << ',' << r.apid << ',' << r.n_reporters << '\n';
  }
}

void write_run_csvs(const RunOutput& run, const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_summary_csv(out_dir + "/summary.csv", {run});
  write_timeseries_csv(out_dir + "/timeseries.csv", run.scenario, *run.metrics);
  write_cwnd_csv(out_dir + "/cwnd.csv", *run.metrics);
  write_sched_csv(out_dir + "/sched.csv", *run.metrics);
}

std::vector<std::string> figure_ids() {
  return {"basic-aggregation", "proack-vs-basic", "buffering", "cwnd-trace",
          "latency",           "loss",            "streaming", "shaper"};
}

namespace {

constexpr int kSeedsPerPoint = 5;

std::vector<RunOutput> run_seeded(Scenario s, int seeds) {
  std::vector<RunOutput> out;
  uint64_t base_seed = s.seed;
  for (int k = 0; k < seeds; ++k) {
    s.seed = base_seed + static_cast<uint64_t>(k);
    out.push_back(run_scenario(s));
  }
  return out;
}

void append(std::vector<RunOutput>& all, std::vector<RunOutput>&& part) {
  for (auto& r : part) all.push_back(std::move(r));
}

}  // namespace

int reproduce(const std::string& figure_id, const std::string& out_dir,
              const Scenario& base) {
  fs::path dir = fs::path(out_dir) / figure_id;
  fs::create_directories(dir);
  std::vector<RunOutput> runs;

  if (figure_id == "basic-aggregation") {
    for (Proto proto : {Proto::Udp, Proto::Tcp}) {
      for (int n = 1; n <= 7; ++n) {
        Scenario s = base;
        s.mode = Mode::Basic;
        s.proto = proto;
        s.n_aps = n;
        s.monitor_loss = 0.0;
        append(runs, run_seeded(s, kSeedsPerPoint));
      }
    }
  } else if (figure_id == "proack-vs-basic") {
    for (Mode mode : {Mode::Basic, Mode::Proactive}) {
      for (int n = 1; n <= 7; ++n) {
        Scenario s = base;
        s.proto = Proto::Tcp;
        s.mode = mode;
        s.n_aps = n;
        append(runs, run_seeded(s, kSeedsPerPoint));
      }
    }
  } else if (figure_id == "buffering") {
    Scenario b = base;
    b.proto = Proto::Tcp;
    b.n_aps = 7;
    b.mode = Mode::Basic;
    append(runs, run_seeded(b, kSeedsPerPoint));
    for (int cap : {64, 256, 1024}) {
      Scenario s = b;
      s.mode = Mode::Buffering;
      s.reorder_cap_segments = cap;
      append(runs, run_seeded(s, kSeedsPerPoint));
    }
  } else if (figure_id == "cwnd-trace") {
    Scenario basic = base;
    basic.proto = Proto::Tcp;
    basic.n_aps = 7;
    basic.mode = Mode::Basic;
    RunOutput r1 = run_scenario(basic);
    write_cwnd_csv((dir / "cwnd_basic.csv").string(), *r1.metrics);

    Scenario pro = basic;
    pro.mode = Mode::Proactive;
    RunOutput r2 = run_scenario(pro);
    write_cwnd_csv((dir / "cwnd_proactive.csv").string(), *r2.metrics);

    // Reference: plain TCP through one uplink of the same total capacity.
    Scenario normal = base;
    normal.proto = Proto::Tcp;
    normal.bapu = false;
    normal.mode = Mode::Basic;
    normal.n_aps = 1;
    normal.uplink_rate = base.uplink_rate * 7;
    RunOutput r3 = run_scenario(normal);
    write_cwnd_csv((dir / "cwnd_normal.csv").string(), *r3.metrics);

    runs.push_back(std::move(r1));
    runs.push_back(std::move(r2));
    runs.push_back(std::move(r3));
  } else if (figure_id == "latency") {
    for (RttPreset p : {RttPreset::Ms32, RttPreset::Ms96, RttPreset::Ms192,
                        RttPreset::Random2080}) {
      Scenario s = base;
      s.proto = Proto::Tcp;
      s.mode = Mode::Proactive;
      s.n_aps = 7;
      s.rtt_preset = p;
      append(runs, run_seeded(s, kSeedsPerPoint));
    }
  } else if (figure_id == "loss") {
    for (double p : {0.0, 0.2, 0.4, 0.6}) {
      Scenario s = base;
      s.proto = Proto::Tcp;
      s.mode = Mode::Proactive;
      s.n_aps = 7;
      s.monitor_loss = p;
      append(runs, run_seeded(s, kSeedsPerPoint));
    }
  } else if (figure_id == "streaming") {
    Scenario fixed = base;
    fixed.proto = Proto::Tcp;
    fixed.mode = Mode::Proactive;
    fixed.n_aps = 7;
    fixed.sender_rate = 11'000'000;
    RunOutput r1 = run_scenario(fixed);
    write_timeseries_csv((dir / "timeseries_11mbps.csv").string(), r1.scenario,
                         *r1.metrics);
    Scenario unlimited = fixed;
    unlimited.sender_rate = 0;
    RunOutput r2 = run_scenario(unlimited);
    write_timeseries_csv((dir / "timeseries_unlimited.csv").string(), r2.scenario,
                         *r2.metrics);
    runs.push_back(std::move(r1));
    runs.push_back(std::move(r2));
  } else if (figure_id == "shaper") {
    Scenario study = base;
    study.shaper_study = true;
    RunOutput r1 = run_scenario(study);
    write_timeseries_csv((dir / "shaper.csv").string(), r1.scenario, *r1.metrics);
    Scenario baseline = study;
    baseline.background_rate = 0;
    RunOutput r2 = run_scenario(baseline);
    write_timeseries_csv((dir / "shaper_baseline.csv").string(), r2.scenario,
                         *r2.metrics);
    runs.push_back(std::move(r1));
    runs.push_back(std::move(r2));
  } else {
    throw ScenarioError("unknown figure id '" + figure_id + "'");
  }

  write_summary_csv((dir / "summary.csv").string(), runs);
  return 0;
}

}  // namespace bapusim
