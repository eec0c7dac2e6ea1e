#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bapusim/experiments.hpp"
#include "bapusim/scenario.hpp"

namespace {

bapusim::Scenario load_with_overrides(const std::string& path, long long seed,
                                      double duration_s) {
  bapusim::Scenario sc = bapusim::load_scenario_file(path);
  if (seed >= 0) sc.seed = static_cast<uint64_t>(seed);
  if (duration_s > 0) sc.duration_s = duration_s;
  bapusim::validate(sc);
  return sc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BaPu uplink-aggregation simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  std::string axis;
  std::string figure;
  long long seed = -1;
  double duration_s = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "override the scenario seed");
    cmd->add_option("--out-dir", out_dir, "output directory for CSV files");
    cmd->add_option("--duration-s", duration_s, "override simulated duration");
  };

  CLI::App* run = app.add_subcommand("run", "run one scenario file");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  add_common(run);

  CLI::App* sw = app.add_subcommand("sweep", "sweep one axis of a base scenario");
  sw->add_option("axis", axis, "n_aps | rtt | loss | strategy | mode")->required();
  sw->add_option("scenario", scenario_path, "base scenario file")->required();
  add_common(sw);

  CLI::App* rep = app.add_subcommand("reproduce", "rerun a published figure");
  std::string ids;
  for (const auto& id : bapusim::figure_ids()) ids += id + " ";
  rep->add_option("figure", figure, "one of: " + ids)->required();
  rep->add_option("scenario", scenario_path, "optional base scenario file");
  add_common(rep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      bapusim::Scenario sc = load_with_overrides(scenario_path, seed, duration_s);
      bapusim::RunOutput out = bapusim::run_scenario(sc);
      bapusim::write_run_csvs(out, out_dir);
      std::printf("%s: goodput %.3f Mbps, efficiency %.3f\n", sc.label().c_str(),
                  out.record.goodput_bps / 1e6, out.record.efficiency);
    } else if (sw->parsed()) {
      bapusim::Scenario sc = load_with_overrides(scenario_path, seed, duration_s);
      std::vector<bapusim::RunOutput> runs = bapusim::sweep(axis, sc);
      std::filesystem::create_directories(out_dir);
      bapusim::write_summary_csv(out_dir + "/summary.csv", runs);
      for (const auto& r : runs) {
        std::printf("%s: goodput %.3f Mbps, efficiency %.3f\n",
                    r.scenario.label().c_str(), r.record.goodput_bps / 1e6,
                    r.record.efficiency);
      }
    } else if (rep->parsed()) {
      bapusim::Scenario base;
      if (!scenario_path.empty()) {
        base = bapusim::load_scenario_file(scenario_path);
      }
      if (seed >= 0) base.seed = static_cast<uint64_t>(seed);
      if (duration_s > 0) base.duration_s = duration_s;
      bapusim::reproduce(figure, out_dir, base);
      std::printf("wrote %s/%s\n", out_dir.c_str(), figure.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
