#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heatax/attribution.hpp"
#include "heatax/dataset.hpp"
#include "heatax/model.hpp"

namespace heatax {

enum class ExecPolicy { serial, parallel };

/// How the heatmap is combined with the input before re-scoring: x + h or x * h.
enum class AxVariant { sum, mul };

std::string_view to_string(AxVariant v);
AxVariant parse_variant(std::string_view text);

/// kappa_j = 1 at the groundtruth class, -1/(C-1) elsewhere; sums to zero.
std::vector<double> score_constants(std::size_t classes, std::size_t truth);

Tensor augment(const Tensor& x, const Tensor& h, AxVariant variant);

/// Raw (pre-softmax) class scores of some classifier.
using RawScoreFn = std::function<Tensor(const Tensor&)>;

/// CO score: kappa . [f(g(x, h)) - f(x)].
double co_score(const RawScoreFn& f, const Tensor& x, const Tensor& h, std::size_t truth, AxVariant variant);
double co_score(const Model& model, const Tensor& x, const Tensor& h, std::size_t truth, AxVariant variant);

struct ScoreRecord {
  std::string sample_id;
  MethodTag method;
  AxVariant variant = AxVariant::sum;
  double co_score = 0.0;
  std::size_t predicted = 0;
  std::size_t truth = 0;
  bool correct = false;
};

struct SweepFailure {
  std::string sample_id;
  std::string what;  // method tag, or "predict"
  std::string message;
};

struct AxSweepOptions {
  bool normalize = true;
  AttributionOptions attribution;
  ExecPolicy policy = ExecPolicy::parallel;
};

struct AxSweepResult {
  std::vector<ScoreRecord> records;  // sorted by sample id; method/variant order as requested
  std::vector<SweepFailure> failures;
};

/// One record per (sample, method, variant). Heatmaps target the predicted
/// class. A sample/method that throws is recorded in `failures` and skipped.
AxSweepResult ax_sweep(const Model& model, std::span<const Sample> samples, std::span<const MethodTag> methods,
                       std::span<const AxVariant> variants, const AxSweepOptions& opts = {});

struct GroupSummary {
  std::size_t count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

/// Quartiles by linear interpolation between order statistics.
GroupSummary summarize(std::vector<double> values);

/// Probability that a random positive outscores a random negative, ties 1/2.
double auroc(std::span<const double> positives, std::span<const double> negatives);

struct GapStats {
  std::optional<GroupSummary> correct, wrong;
  std::optional<double> separation;  // min(correct) - max(wrong)
  std::optional<double> auroc;       // co-score as a ranking of correctness
};

GapStats gap_stats(std::span<const ScoreRecord> records, const MethodTag& method, AxVariant variant);

struct HistogramBin {
  double lo = 0, hi = 0;
  std::size_t count_correct = 0, count_wrong = 0;
};

/// Equal-width bins over the pooled score range of the selected records.
std::vector<HistogramBin> gap_histogram(std::span<const ScoreRecord> records, const MethodTag& method,
                                        AxVariant variant, std::size_t bins = 40);

}  // namespace heatax
