#include "heatax/csv.hpp"

#include <cstdio>
#include <sstream>

#include "heatax/error.hpp"

namespace heatax {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

constexpr char kScoreHeader[] = "sample_id,method,variant,co_score,pred,truth,correct";

void check_field(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    fail(ErrorCode::format, "csv: field contains a separator: '" + s + "'");
  }
}

std::size_t parse_index(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    fail(ErrorCode::format, "csv line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
}

double parse_real(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::format, "csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string score_csv(std::span<const ScoreRecord> records) {
  std::string out = std::string(kScoreHeader) + "\n";
  for (const auto& r : records) {
    check_field(r.sample_id);
    out += r.sample_id;
    out += ',';
    out += r.method.str();
    out += ',';
    out += to_string(r.variant);
    out += ',';
    out += format_real(r.co_score);
    out += ',' + std::to_string(r.predicted) + ',' + std::to_string(r.truth) + ',' + (r.correct ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<ScoreRecord> parse_score_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kScoreHeader) fail(ErrorCode::format, "score csv: missing header");
  std::vector<ScoreRecord> out;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) fail(ErrorCode::format, "score csv line " + std::to_string(n) + ": expected 7 fields");
    ScoreRecord r;
    r.sample_id = f[0];
    try {
      r.method = MethodTag::parse(f[1]);
      r.variant = parse_variant(f[2]);
    } catch (const Error& e) {
      fail(ErrorCode::format, "score csv line " + std::to_string(n) + ": " + e.what());
    }
    r.co_score = parse_real(f[3], n);
    r.predicted = parse_index(f[4], n);
    r.truth = parse_index(f[5], n);
    if (f[6] != "0" && f[6] != "1") fail(ErrorCode::format, "score csv line " + std::to_string(n) + ": bad flag");
    r.correct = f[6] == "1";
    out.push_back(std::move(r));
  }
  return out;
}

std::string histogram_csv(std::span<const HistogramBin> bins) {
  std::string out = "bin_lo,bin_hi,count_correct,count_wrong\n";
  for (const auto& b : bins) {
    out += format_real(b.lo) + ',' + format_real(b.hi) + ',' + std::to_string(b.count_correct) + ',' +
           std::to_string(b.count_wrong) + "\n";
  }
  return out;
}

std::string gap_stats_csv(std::span<const GapStatsRow> rows) {
  std::string out = "method,variant,group,count,min,q1,median,q3,max\n";
  auto group = [&](const GapStatsRow& r, const char* name, const std::optional<GroupSummary>& g) {
    out += r.method.str() + ',' + std::string(to_string(r.variant)) + ',' + name + ',';
    if (!g) {
      out += "0,,,,,\n";
      return;
    }
    out += std::to_string(g->count) + ',' + format_real(g->min) + ',' + format_real(g->q1) + ',' +
           format_real(g->median) + ',' + format_real(g->q3) + ',' + format_real(g->max) + "\n";
  };
  for (const auto& r : rows) {
    group(r, "correct", r.stats.correct);
    group(r, "wrong", r.stats.wrong);
  }
  out += "method,variant,separation,auroc\n";
  for (const auto& r : rows) {
    out += r.method.str() + ',' + std::string(to_string(r.variant)) + ',';
    out += (r.stats.separation ? format_real(*r.stats.separation) : "") + ',';
    out += (r.stats.auroc ? format_real(*r.stats.auroc) : "") + "\n";
  }
  return out;
}

std::string trace_csv(const GaxTrace& trace) {
  std::string out = "step,loss,co_score\n";
  for (const auto& s : trace.iterations) {
    out += std::to_string(s.step) + ',' + format_real(s.loss) + ',' + format_real(s.co) + "\n";
  }
  return out;
}

std::string toy_csv(std::span<const toy::SweepRow> rows) {
  std::string out = "theta,x1,x2,h1,h2\n";
  for (const auto& r : rows) {
    out += format_real(r.theta) + ',' + format_real(r.x1) + ',' + format_real(r.x2) + ',' + format_real(r.h1) + ',' +
           format_real(r.h2) + "\n";
  }
  return out;
}

std::string gax_manifest_csv(std::span<const GaxManifestRow> rows) {
  std::string out = "sample_id,trace,snapshots,converged,final_co,steps\n";
  for (const auto& r : rows) {
    check_field(r.sample_id);
    std::string snaps;
    for (std::size_t i = 0; i < r.snapshot_paths.size(); ++i) {
      check_field(r.snapshot_paths[i]);
      if (i) snaps += ';';
      snaps += r.snapshot_paths[i];
    }
    out += r.sample_id + ',' + r.trace_path + ',' + snaps + ',' + (r.converged ? "1" : "0") + ',' +
           format_real(r.final_co) + ',' + std::to_string(r.steps) + "\n";
  }
  return out;
}

}  // namespace heatax
