// Command-line driver: experiment sweeps, single-topology segmentation,
// dump verification and the centralized SR reference.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdsr/experiment.hpp"
#include "tdsr/oracle.hpp"
#include "tdsr/simulation.hpp"
#include "tdsr/topology.hpp"

namespace {

tdsr::NetworkGraph load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tdsr::IoError("cannot open topology file " + path);
  return tdsr::read_topology(in);
}

std::unique_ptr<std::ofstream> open_out(const std::string& path) {
  if (path.empty()) return nullptr;
  auto f = std::make_unique<std::ofstream>(path);
  if (!*f) throw tdsr::IoError("cannot open output file " + path);
  return f;
}

int cmd_run(const tdsr::ExperimentConfig& cfg, const std::string& out_path) {
  auto file = open_out(out_path);
  std::ostream& os = file ? *file : std::cout;
  const auto outcomes = tdsr::run_experiment(cfg);
  os << tdsr::csv_header() << "\n";
  std::vector<tdsr::TrialRecord> records;
  bool any_flagged = false;
  for (const auto& o : outcomes) {
    tdsr::write_csv_row(os, o.record);
    records.push_back(o.record);
    if (o.flagged) {
      any_flagged = true;
      for (const auto& p : o.problems)
        std::cerr << "flagged seed " << o.record.seed << ": " << p << "\n";
    }
  }
  tdsr::write_summary(&os == &std::cout ? std::cerr : std::cout,
                      tdsr::summarize(records));
  return any_flagged ? 1 : 0;
}

int cmd_segment(const std::string& topo_path, const std::string& out_path,
                const std::string& trace_path) {
  const tdsr::NetworkGraph g = load_topology(topo_path);
  auto trace = open_out(trace_path);
  tdsr::RunOptions opts;
  opts.trace = trace.get();
  const tdsr::TdsrRun run = tdsr::run_tdsr(g, opts);
  auto file = open_out(out_path);
  tdsr::write_segmentation(file ? *file : std::cout, run.segmentation);
  return 0;
}

int cmd_verify(const std::string& topo_path, const std::string& dump_path) {
  const tdsr::NetworkGraph g = load_topology(topo_path);
  std::ifstream in(dump_path);
  if (!in) throw tdsr::IoError("cannot open dump file " + dump_path);
  const tdsr::SegmentationResult res = tdsr::read_segmentation(in);
  const auto problems = tdsr::verify_dump(g, res);
  for (const auto& p : problems) std::cerr << "violation: " << p << "\n";
  if (problems.empty()) {
    std::cout << "ok\n";
    return 0;
  }
  return 1;
}

int cmd_oracle_sr(const std::string& topo_path, std::optional<tdsr::SwitchId> start,
                  const std::string& out_path) {
  const tdsr::NetworkGraph g = load_topology(topo_path);
  tdsr::SwitchId s = start.value_or(0);
  const tdsr::SegmentationResult res = tdsr::oracle::centralized_sr(g, s);
  auto file = open_out(out_path);
  std::ostream& os = file ? *file : std::cout;
  tdsr::write_segmentation(os, res);
  for (const auto& sn : res.subnets) {
    os << "# subnet " << sn.id << " start " << sn.starting_switch << " switches";
    for (tdsr::SwitchId v : sn.switches) os << " " << v;
    os << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TDSR: transparent distributed segment-based routing simulator"};
  app.require_subcommand(1);

  tdsr::ExperimentConfig cfg;
  std::string distribution = "horizontal";
  std::string out_path, trace_path, topo_path, dump_path;
  std::optional<tdsr::SwitchId> start;

  auto* run = app.add_subcommand("run", "run a mesh experiment sweep, emit CSV");
  run->set_config("--config", "", "read experiment options from an INI file");
  run->add_option("--rows", cfg.rows, "mesh rows")->capture_default_str();
  run->add_option("--cols", cfg.cols, "mesh columns")->capture_default_str();
  run->add_option("--distribution", distribution,
                  "horizontal|center|random|zigzag")
      ->capture_default_str();
  run->add_option("--fault-rates", cfg.fault_rates_pct,
                  "defective-link percentages (0..45)")
      ->delimiter(',');
  run->add_option("--trials", cfg.trials_per_rate, "trials per nonzero rate")
      ->capture_default_str();
  run->add_option("--seed", cfg.base_seed, "base seed")->capture_default_str();
  run->add_flag("--verify", cfg.verify, "cross-check every trial with the oracles");
  run->add_option("--out", out_path, "CSV output path (default stdout)");

  auto* segment = app.add_subcommand("segment", "segment one topology file");
  segment->add_option("--topology", topo_path, "topology file")->required();
  segment->add_option("--out", out_path, "dump output path (default stdout)");
  segment->add_option("--trace", trace_path, "event trace output path");

  auto* verify = app.add_subcommand("verify", "check a segmentation dump");
  verify->add_option("--topology", topo_path, "topology file")->required();
  verify->add_option("--dump", dump_path, "segmentation dump")->required();

  auto* oracle_sr = app.add_subcommand("oracle-sr", "centralized SR reference");
  oracle_sr->add_option("--topology", topo_path, "topology file")->required();
  oracle_sr->add_option("--start", start, "starting switch (default 0)");
  oracle_sr->add_option("--out", out_path, "dump output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto kind = tdsr::parse_distribution(distribution);
      if (!kind) {
        std::cerr << "unknown distribution '" << distribution << "'\n";
        return 2;
      }
      cfg.distribution = *kind;
      return cmd_run(cfg, out_path);
    }
    if (segment->parsed()) return cmd_segment(topo_path, out_path, trace_path);
    if (verify->parsed()) return cmd_verify(topo_path, dump_path);
    if (oracle_sr->parsed()) return cmd_oracle_sr(topo_path, start, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
