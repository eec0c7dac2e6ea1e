#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bapusim/metrics.hpp"
#include "bapusim/scenario.hpp"

namespace bapusim {

struct RunOutput {
  Scenario scenario;
  MetricsRecord record;
  std::shared_ptr<Metrics> metrics;
};

// Aggregation efficiency denominator for a run: n x per-uplink ceiling.
double efficiency_denominator_bps(const Scenario& sc);

MetricsRecord summarize(const Scenario& sc, const Metrics& m);

// Builds the topology, runs it, and reduces the metrics to a summary row.
RunOutput run_scenario(const Scenario& sc);

// One record per point along the axis, matched seeds across points.
// Axes: n_aps, rtt, loss, strategy, mode.
std::vector<RunOutput> sweep(const std::string& axis, const Scenario& base);
std::vector<std::string> sweep_axes();

void write_summary_csv(const std::string& path, const std::vector<RunOutput>& runs);
void write_timeseries_csv(const std::string& path, const Scenario& sc, const Metrics& m);
void write_cwnd_csv(const std::string& path, const Metrics& m);
void write_sched_csv(const std::string& path, const Metrics& m);
// summary.csv, timeseries.csv, cwnd.csv, sched.csv under out_dir.
void write_run_csvs(const RunOutput& run, const std::string& out_dir);

// Desk-scale reruns of the published figures; each id maps to a canned
// sweep whose CSVs land under out_dir/<figure-id>/.
std::vector<std::string> figure_ids();
int reproduce(const std::string& figure_id, const std::string& out_dir,
              const Scenario& base);

}  // namespace bapusim
