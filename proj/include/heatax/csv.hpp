#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "heatax/ax.hpp"
#include "heatax/gax.hpp"
#include "heatax/toy.hpp"

namespace heatax {

/// Shortest-ish round-trippable text for CSV cells ("%.9g").
std::string format_real(double v);

/// Header `sample_id,method,variant,co_score,pred,truth,correct`, LF line ends.
std::string score_csv(std::span<const ScoreRecord> records);
std::vector<ScoreRecord> parse_score_csv(const std::string& text);

/// `bin_lo,bin_hi,count_correct,count_wrong`
std::string histogram_csv(std::span<const HistogramBin> bins);

/// `method,variant,group,count,min,q1,median,q3,max` rows, then
/// `method,variant,separation,auroc` rows (empty cells when undefined).
struct GapStatsRow {
  MethodTag method;
  AxVariant variant;
  GapStats stats;
};
std::string gap_stats_csv(std::span<const GapStatsRow> rows);

/// `step,loss,co_score`
std::string trace_csv(const GaxTrace& trace);

/// `theta,x1,x2,h1,h2`
std::string toy_csv(std::span<const toy::SweepRow> rows);

/// `sample_id,trace,snapshots,converged,final_co,steps`; snapshots are
/// separated by ';'.
struct GaxManifestRow {
  std::string sample_id;
  std::string trace_path;
  std::vector<std::string> snapshot_paths;
  bool converged = false;
  double final_co = 0.0;
  std::size_t steps = 0;
};
std::string gax_manifest_csv(std::span<const GaxManifestRow> rows);

/// Splits one CSV line on commas (no quoting; fields never contain commas).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace heatax
