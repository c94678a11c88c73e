#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "tdsr/error.hpp"
#include "tdsr/rng.hpp"
#include "tdsr/simulation.hpp"
#include "tdsr/topology.hpp"

namespace tdsr {

struct ExperimentConfig {
  std::uint32_t rows = 8;
  std::uint32_t cols = 8;
  DistributionKind distribution = DistributionKind::Horizontal;
  std::vector<int> fault_rates_pct = {0, 5, 10, 15, 20, 25, 30, 35, 40, 45};
  std::uint32_t trials_per_rate = 30;
  std::uint64_t base_seed = 1;
  bool verify = false;
};

struct TrialRecord {
  std::uint32_t rows = 0, cols = 0;
  DistributionKind distribution = DistributionKind::Random;
  int fault_rate_pct = 0;
  std::uint64_t seed = 0;
  std::uint32_t removed_links = 0;
  std::uint64_t mst_cycles = 0, labeling_cycles = 0, segmentation_cycles = 0;
  std::uint64_t total_cycles = 0;
  std::uint32_t mst_depth = 0;
  std::uint32_t num_segments = 0, num_subnets = 0, num_bridges = 0;
  std::uint32_t num_expansions = 0;
  std::uint32_t max_expansion_distance = 0;
  bool verified = false;
};

inline const char* csv_header() {
  return "rows,cols,distribution,fault_rate_pct,seed,removed_links,mst_cycles,"
         "labeling_cycles,segmentation_cycles,total_cycles,mst_depth,"
         "num_segments,num_subnets,num_bridges,num_expansions,"
         "max_expansion_distance,verified";
}

inline void write_csv_row(std::ostream& os, const TrialRecord& r) {
  os << r.rows << "," << r.cols << "," << to_string(r.distribution) << ","
     << r.fault_rate_pct << "," << r.seed << "," << r.removed_links << ","
     << r.mst_cycles << "," << r.labeling_cycles << "," << r.segmentation_cycles
     << "," << r.total_cycles << "," << r.mst_depth << "," << r.num_segments
     << "," << r.num_subnets << "," << r.num_bridges << "," << r.num_expansions
     << "," << r.max_expansion_distance << "," << (r.verified ? 1 : 0) << "\n";
}

inline TrialRecord parse_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) cells.push_back(cell);
  if (cells.size() != 17) throw IoError("expected 17 CSV cells");
  TrialRecord r;
  std::size_t i = 0;
  auto u32 = [&] { return static_cast<std::uint32_t>(std::stoul(cells[i++])); };
  r.rows = u32();
  r.cols = u32();
  const auto dist = parse_distribution(cells[i++]);
  if (!dist) throw IoError("bad distribution in CSV");
  r.distribution = *dist;
  r.fault_rate_pct = std::stoi(cells[i++]);
  r.seed = std::stoull(cells[i++]);
  r.removed_links = u32();
  r.mst_cycles = std::stoull(cells[i++]);
  r.labeling_cycles = std::stoull(cells[i++]);
  r.segmentation_cycles = std::stoull(cells[i++]);
  r.total_cycles = std::stoull(cells[i++]);
  r.mst_depth = u32();
  r.num_segments = u32();
  r.num_subnets = u32();
  r.num_bridges = u32();
  r.num_expansions = u32();
  r.max_expansion_distance = u32();
  r.verified = cells[i++] == "1";
  return r;
}

/// Seed streams: weights vary only with the base seed, faults with
/// (base, rate index, trial index); any record can be recomputed alone.
inline std::uint64_t weight_seed(std::uint64_t base_seed) {
  return derive_seed(base_seed, 7, 0);
}

inline std::uint64_t fault_seed(std::uint64_t base_seed, std::size_t rate_idx,
                                std::uint32_t trial_idx) {
  return derive_seed(base_seed, 1000 + rate_idx, trial_idx);
}

struct TrialOutcome {
  TrialRecord record;
  bool flagged = false;  // verification failed or the simulation timed out
  std::vector<std::string> problems;
};

/// Builds the trial's topology, runs the three stages, optionally verifies.
inline TrialOutcome run_trial(const ExperimentConfig& cfg, int rate_pct,
                              std::size_t rate_idx, std::uint32_t trial_idx) {
  TrialOutcome out;
  TrialRecord& rec = out.record;
  rec.rows = cfg.rows;
  rec.cols = cfg.cols;
  rec.distribution = cfg.distribution;
  rec.fault_rate_pct = rate_pct;
  rec.seed = fault_seed(cfg.base_seed, rate_idx, trial_idx);

  Mesh mesh = generate_mesh(cfg.rows, cfg.cols);
  WeightDistribution dist{cfg.distribution, weight_seed(cfg.base_seed)};
  assign_weights(mesh, dist);
  if (rate_pct > 0) inject_faults(mesh.graph, rate_pct, rec.seed);
  for (const Link& l : mesh.graph.links())
    if (l.defective) ++rec.removed_links;

  try {
    const TdsrRun run = run_tdsr(mesh.graph);
    rec.mst_cycles = run.clock.mst_boundary;
    rec.labeling_cycles = run.clock.label_boundary - run.clock.mst_boundary;
    rec.segmentation_cycles =
        run.clock.segment_boundary - run.clock.label_boundary;
    rec.total_cycles = run.clock.segment_boundary;
    rec.mst_depth = run.mst_depth;
    rec.num_segments = static_cast<std::uint32_t>(run.segmentation.segments.size());
    rec.num_subnets = static_cast<std::uint32_t>(run.segmentation.subnets.size());
    rec.num_bridges = static_cast<std::uint32_t>(run.segmentation.bridges.size());
    rec.num_expansions = run.segmentation.num_expansions();
    rec.max_expansion_distance = run.segmentation.max_expansion_distance();
    if (cfg.verify) {
      out.problems = verify_run(mesh.graph, run);
      rec.verified = out.problems.empty();
      out.flagged = !rec.verified;
    }
  } catch (const SimTimeout& e) {
    out.flagged = true;
    out.problems.push_back(e.what());
  }
  return out;
}

/// Full experiment sweep. The 0% rate is deterministic and runs once.
inline std::vector<TrialOutcome> run_experiment(const ExperimentConfig& cfg) {
  std::vector<TrialOutcome> out;
  for (std::size_t ri = 0; ri < cfg.fault_rates_pct.size(); ++ri) {
    const int rate = cfg.fault_rates_pct[ri];
    TDSR_CHECK(rate >= 0 && rate <= 45, "fault rate outside 0..45");
    const std::uint32_t trials = rate == 0 ? 1 : cfg.trials_per_rate;
    for (std::uint32_t t = 0; t < trials; ++t)
      out.push_back(run_trial(cfg, rate, ri, t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tukey summaries
// ---------------------------------------------------------------------------

struct SummaryRow {
  std::uint32_t rows = 0, cols = 0;
  DistributionKind distribution = DistributionKind::Random;
  int fault_rate_pct = 0;
  std::size_t n = 0;
  double median = 0, q1 = 0, q3 = 0;
  double whisker_low = 0, whisker_high = 0;
  std::size_t outliers = 0;
};

namespace detail {
inline double median_of(const std::vector<double>& sorted, std::size_t lo,
                        std::size_t hi) {
  const std::size_t n = hi - lo;
  if (n % 2 == 1) return sorted[lo + n / 2];
  return (sorted[lo + n / 2 - 1] + sorted[lo + n / 2]) / 2.0;
}
}  // namespace detail

/// Tukey box: quartiles by the median-exclusion rule, whiskers at the most
/// extreme data within 1.5 IQR of the quartiles.
inline SummaryRow summarize_values(std::vector<double> values) {
  SummaryRow s;
  s.n = values.size();
  TDSR_CHECK(s.n >= 1, "summary of empty cell");
  std::sort(values.begin(), values.end());
  s.median = detail::median_of(values, 0, values.size());
  if (values.size() == 1) {
    s.q1 = s.q3 = s.whisker_low = s.whisker_high = values[0];
    return s;
  }
  const std::size_t half = values.size() / 2;
  s.q1 = detail::median_of(values, 0, half);
  s.q3 = detail::median_of(values, values.size() - half, values.size());
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr, hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = s.q3;
  s.whisker_high = s.q1;
  for (double v : values) {
    if (v >= lo_fence && v <= hi_fence) {
      s.whisker_low = std::min(s.whisker_low, v);
      s.whisker_high = std::max(s.whisker_high, v);
    } else {
      ++s.outliers;
    }
  }
  return s;
}

/// One summary per (size, distribution, rate) cell of total_cycles.
inline std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  std::map<std::tuple<std::uint32_t, std::uint32_t, int, int>,
           std::vector<double>>
      cells;
  for (const TrialRecord& r : records)
    cells[{r.rows, r.cols, static_cast<int>(r.distribution), r.fault_rate_pct}]
        .push_back(static_cast<double>(r.total_cycles));
  std::vector<SummaryRow> out;
  for (auto& [key, values] : cells) {
    SummaryRow s = summarize_values(std::move(values));
    s.rows = std::get<0>(key);
    s.cols = std::get<1>(key);
    s.distribution = static_cast<DistributionKind>(std::get<2>(key));
    s.fault_rate_pct = std::get<3>(key);
    out.push_back(s);
  }
  return out;
}

inline void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
  for (const SummaryRow& s : rows)
    os << "summary rows=" << s.rows << " cols=" << s.cols
       << " distribution=" << to_string(s.distribution)
       << " rate=" << s.fault_rate_pct << " n=" << s.n << " median=" << s.median
       << " q1=" << s.q1 << " q3=" << s.q3 << " lo=" << s.whisker_low
       << " hi=" << s.whisker_high << " outliers=" << s.outliers << "\n";
}

}  // namespace tdsr
