#include "heatax/ax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "heatax/error.hpp"

namespace heatax {

std::string_view to_string(AxVariant v) { return v == AxVariant::sum ? "sum" : "mul"; }

AxVariant parse_variant(std::string_view text) {
  if (text == "sum") return AxVariant::sum;
  if (text == "mul") return AxVariant::mul;
  fail(ErrorCode::invalid_argument, "unknown AX variant '" + std::string(text) + "' (expected sum or mul)");
}

std::vector<double> score_constants(std::size_t classes, std::size_t truth) {
  if (classes < 2) fail(ErrorCode::invalid_argument, "score constants: need at least 2 classes");
  if (truth >= classes) fail(ErrorCode::invalid_argument, "score constants: groundtruth out of range");
  std::vector<double> kappa(classes, -1.0 / static_cast<double>(classes - 1));
  kappa[truth] = 1.0;
  return kappa;
}

Tensor augment(const Tensor& x, const Tensor& h, AxVariant variant) {
  require_same_shape(x, h, "ax");
  return variant == AxVariant::sum ? x + h : x * h;
}

double co_score(const RawScoreFn& f, const Tensor& x, const Tensor& h, std::size_t truth, AxVariant variant) {
  const Tensor before = f(x);
  const Tensor after = f(augment(x, h, variant));
  require_same_shape(before, after, "co-score");
  const auto kappa = score_constants(before.size(), truth);
  double s = 0.0;
  for (std::size_t i = 0; i < kappa.size(); ++i) s += kappa[i] * (after[i] - before[i]);
  return s;
}

double co_score(const Model& model, const Tensor& x, const Tensor& h, std::size_t truth, AxVariant variant) {
  return co_score([&model](const Tensor& in) { return model.raw_scores(in); }, x, h, truth, variant);
}

namespace {

struct SampleOutcome {
  std::vector<ScoreRecord> records;
  std::vector<SweepFailure> failures;
};

SampleOutcome sweep_one(const Model& model, const Sample& s, std::span<const MethodTag> methods,
                        std::span<const AxVariant> variants, const AxSweepOptions& opts) {
  SampleOutcome out;
  std::size_t predicted = 0;
  try {
    predicted = model.predict(s.x).label;
  } catch (const std::exception& e) {
    out.failures.push_back({s.id, "predict", e.what()});
    return out;
  }
  for (const auto& m : methods) {
    try {
      Heatmap h = attribute(model, s.x, predicted, m, opts.attribution);
      if (opts.normalize) h = normalize(std::move(h));
      std::vector<ScoreRecord> rows;
      for (auto v : variants) {
        ScoreRecord r;
        r.sample_id = s.id;
        r.method = m;
        r.variant = v;
        r.co_score = co_score(model, s.x, h.values, s.label, v);
        r.predicted = predicted;
        r.truth = s.label;
        r.correct = predicted == s.label;
        rows.push_back(std::move(r));
      }
      out.records.insert(out.records.end(), rows.begin(), rows.end());
    } catch (const std::exception& e) {
      out.failures.push_back({s.id, m.str(), e.what()});
    }
  }
  return out;
}

}  // namespace

AxSweepResult ax_sweep(const Model& model, std::span<const Sample> samples, std::span<const MethodTag> methods,
                       std::span<const AxVariant> variants, const AxSweepOptions& opts) {
  std::vector<SampleOutcome> outcomes(samples.size());
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  if (opts.policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) outcomes[i] = sweep_one(model, samples[i], methods, variants, opts);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) outcomes[i] = sweep_one(model, samples[i], methods, variants, opts);
  }
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return samples[a].id < samples[b].id; });
  AxSweepResult result;
  for (auto i : order) {
    auto& o = outcomes[i];
    result.records.insert(result.records.end(), o.records.begin(), o.records.end());
    result.failures.insert(result.failures.end(), o.failures.begin(), o.failures.end());
  }
  return result;
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

GroupSummary summarize(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::invalid_argument, "summarize: no values");
  std::sort(values.begin(), values.end());
  GroupSummary g;
  g.count = values.size();
  g.min = values.front();
  g.max = values.back();
  g.q1 = quantile_sorted(values, 0.25);
  g.median = quantile_sorted(values, 0.5);
  g.q3 = quantile_sorted(values, 0.75);
  return g;
}

double auroc(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) fail(ErrorCode::invalid_argument, "auroc: need both groups");
  // Mann-Whitney U via average ranks over the pooled sample.
  std::vector<std::pair<double, bool>> pooled;
  pooled.reserve(positives.size() + negatives.size());
  for (double v : positives) pooled.emplace_back(v, true);
  for (double v : negatives) pooled.emplace_back(v, false);
  std::sort(pooled.begin(), pooled.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].second) rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(positives.size()), nn = static_cast<double>(negatives.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

namespace {

void split_groups(std::span<const ScoreRecord> records, const MethodTag& method, AxVariant variant,
                  std::vector<double>& correct, std::vector<double>& wrong) {
  for (const auto& r : records) {
    if (!(r.method == method) || r.variant != variant) continue;
    (r.correct ? correct : wrong).push_back(r.co_score);
  }
}

}  // namespace

GapStats gap_stats(std::span<const ScoreRecord> records, const MethodTag& method, AxVariant variant) {
  std::vector<double> correct, wrong;
  split_groups(records, method, variant, correct, wrong);
  if (correct.empty() && wrong.empty()) {
    fail(ErrorCode::invalid_argument, "gap-stats: no records for " + method.str() + "/" + std::string(to_string(variant)));
  }
  GapStats s;
  if (!correct.empty()) s.correct = summarize(correct);
  if (!wrong.empty()) s.wrong = summarize(wrong);
  if (s.correct && s.wrong) {
    s.separation = s.correct->min - s.wrong->max;
    s.auroc = auroc(correct, wrong);
  }
  return s;
}

std::vector<HistogramBin> gap_histogram(std::span<const ScoreRecord> records, const MethodTag& method,
                                        AxVariant variant, std::size_t bins) {
  if (bins == 0) fail(ErrorCode::invalid_argument, "histogram: need at least one bin");
  std::vector<double> correct, wrong;
  split_groups(records, method, variant, correct, wrong);
  if (correct.empty() && wrong.empty()) fail(ErrorCode::invalid_argument, "histogram: no records");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : correct) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : wrong) lo = std::min(lo, v), hi = std::max(hi, v);
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = lo + width * static_cast<double>(b);
    out[b].hi = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  auto bin_of = [&](double v) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    return std::min(b, bins - 1);
  };
  for (double v : correct) ++out[bin_of(v)].count_correct;
  for (double v : wrong) ++out[bin_of(v)].count_wrong;
  return out;
}

}  // namespace heatax
