#include "heatax/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <ostream>
#include <sstream>

#include "heatax/ax.hpp"
#include "heatax/csv.hpp"
#include "heatax/dataset.hpp"
#include "heatax/error.hpp"
#include "heatax/formats.hpp"
#include "heatax/gax.hpp"
#include "heatax/toy.hpp"
#include "heatax/train.hpp"

namespace heatax {

namespace fs = std::filesystem;

std::vector<std::string> config_file_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config file '" + path + "'");
  std::vector<std::string> args;
  std::string line;
  std::size_t n = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::format, "config " + path + ":" + std::to_string(n) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorCode::format, "config " + path + ":" + std::to_string(n) + ": empty key");
    if (key == "config") continue;
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Seed for every stochastic component");
  sub->add_option("--config", c.config, "Flat key=value file; command-line flags override it");
}

// Config values go in front of the command-line flags; with the TakeLast
// policy the later (command-line) occurrence wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  if (args.empty()) return args;
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::vector<std::string> out{args[0]};
  for (auto& a : config_file_args(path)) out.push_back(std::move(a));
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

std::string safe_name(std::string s) {
  for (char& c : s) {
    if (c == '/' || c == ':' || c == '\\' || c == ' ') c = '_';
  }
  return s;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) ensure_dir(p.parent_path());
  write_text_file(p, text);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<MethodTag> parse_methods(const std::string& list, const std::string& gradcam_layer) {
  if (list.empty() || list == "all") return all_methods(gradcam_layer);
  std::vector<MethodTag> out;
  for (const auto& m : split_list(list)) {
    MethodTag t = MethodTag::parse(m);
    if (t.method == Method::layer_gradcam && m.find(':') == std::string::npos) t.layer = gradcam_layer;
    out.push_back(std::move(t));
  }
  return out;
}

Dataset load_for_model(const std::string& dir, const Model& model) {
  const Shape& in = model.input_shape();
  if (in.size() != 3) fail(ErrorCode::invalid_argument, "model input " + shape_str(in) + " is not an image shape");
  IngestOptions opts{.height = in[1], .width = in[2], .stack_gray = in[0] == 3};
  Dataset d = load_dataset(dir, opts);
  if (d.shape != in) {
    fail(ErrorCode::shape_mismatch, "dataset shape " + shape_str(d.shape) + " != model input " + shape_str(in));
  }
  return d;
}

std::vector<Sample> pick(const Dataset& d, const std::string& split, std::size_t limit) {
  const auto& s = d.split(split);
  const std::size_t n = limit == 0 ? s.size() : std::min(limit, s.size());
  return {s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n)};
}

void print_warnings(const Dataset& d, std::ostream& err) {
  for (const auto& w : d.warnings) err << "heatax: warning: " << w << "\n";
}

std::string metrics_line(const char* label, const ClassificationMetrics& m) {
  return std::string(label) + " count=" + std::to_string(m.count) + " accuracy=" + format_real(m.accuracy) +
         " precision=" + format_real(m.precision) + " recall=" + format_real(m.recall);
}

// ---------------------------------------------------------------- gen-data

struct GenDataOpts {
  Common common;
  std::string out;
  BlobSpec spec{.n_train = 2000, .n_val = 500, .n_test = 500};
};

void setup_gen_data(CLI::App& app, GenDataOpts& o) {
  auto* sub = app.add_subcommand("gen-data", "Write a synthetic class-conditional blob dataset");
  add_common(sub, o.common);
  sub->add_option("--out", o.out, "Output directory")->required();
  sub->add_option("--classes", o.spec.classes, "Number of classes")->capture_default_str();
  sub->add_option("--channels", o.spec.channels, "Image channels (1 or 3)")->capture_default_str();
  sub->add_option("--height", o.spec.height)->capture_default_str();
  sub->add_option("--width", o.spec.width)->capture_default_str();
  sub->add_option("--n-train", o.spec.n_train)->capture_default_str();
  sub->add_option("--n-val", o.spec.n_val)->capture_default_str();
  sub->add_option("--n-test", o.spec.n_test)->capture_default_str();
  sub->add_option("--background", o.spec.background)->capture_default_str();
  sub->add_option("--signal", o.spec.signal)->capture_default_str();
  sub->add_option("--noise", o.spec.noise)->capture_default_str();
  sub->add_option("--jitter", o.spec.jitter)->capture_default_str();
  sub->add_option("--label-noise", o.spec.label_noise, "Label flip probability, train/val")->capture_default_str();
  sub->add_option("--test-label-noise", o.spec.test_label_noise, "Label flip probability, test")
      ->capture_default_str();
  sub->add_flag("--dark", o.spec.dark, "Zero background (sparse images)");
}

int run_gen_data(GenDataOpts& o, std::ostream& out) {
  o.spec.seed = o.common.seed;
  const Dataset d = make_blobs(o.spec);
  write_dataset(d, o.spec, o.out);
  out << "gen-data: train=" << d.train.size() << " val=" << d.val.size() << " test=" << d.test.size()
      << " classes=" << d.num_classes << " shape=" << shape_str(d.shape) << "\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainOpts {
  Common common;
  std::string data, out, metrics, arch = "mini";
  TrainConfig cfg;
  std::size_t conv1 = 8, conv2 = 16;
  std::size_t height = 0, width = 0;
  bool stack_gray = false;
};

void setup_train(CLI::App& app, TrainOpts& o) {
  auto* sub = app.add_subcommand("train", "Train a classifier and save it as a GAXM file");
  add_common(sub, o.common);
  sub->add_option("--data", o.data, "Dataset directory")->required();
  sub->add_option("--out", o.out, "Output weight file (.gaxm)")->required();
  sub->add_option("--metrics", o.metrics, "Also write the metrics report to this file");
  sub->add_option("--arch", o.arch, "mini | linear")->check(CLI::IsMember({"mini", "linear"}))->capture_default_str();
  sub->add_option("--conv1", o.conv1)->capture_default_str();
  sub->add_option("--conv2", o.conv2)->capture_default_str();
  sub->add_option("--target-acc", o.cfg.target_val_accuracy, "Stop once val accuracy reaches this")
      ->capture_default_str();
  sub->add_option("--max-iter", o.cfg.max_iterations)->capture_default_str();
  sub->add_option("--min-iter", o.cfg.min_iterations)->capture_default_str();
  sub->add_option("--val-every", o.cfg.val_every)->capture_default_str();
  sub->add_option("--batch", o.cfg.batch_size)->capture_default_str();
  sub->add_option("--lr", o.cfg.adam.learning_rate)->capture_default_str();
  sub->add_option("--beta1", o.cfg.adam.beta1)->capture_default_str();
  sub->add_option("--beta2", o.cfg.adam.beta2)->capture_default_str();
  sub->add_option("--height", o.height, "Resize height (0: dataset size)");
  sub->add_option("--width", o.width, "Resize width (0: dataset size)");
  sub->add_flag("--stack-gray", o.stack_gray, "Replicate grey images to 3 channels");
}

int run_train(TrainOpts& o, std::ostream& out, std::ostream& err) {
  const Dataset d = load_dataset(o.data, {.height = o.height, .width = o.width, .stack_gray = o.stack_gray});
  print_warnings(d, err);
  if (d.shape.size() != 3) fail(ErrorCode::format, "dataset images must be (C,H,W)");
  Model model;
  if (o.arch == "mini") {
    MiniConvNetConfig mc{.channels = d.shape[0], .height = d.shape[1], .width = d.shape[2],
                         .conv1_channels = o.conv1, .conv2_channels = o.conv2, .kernel = 3,
                         .classes = d.num_classes};
    model = make_mini_conv_net(mc, o.common.seed);
  } else {
    std::mt19937_64 rng(o.common.seed);
    const std::size_t in = shape_size(d.shape);
    std::uniform_real_distribution<double> dist(-1.0 / std::sqrt(static_cast<double>(in)),
                                                1.0 / std::sqrt(static_cast<double>(in)));
    Tensor w({d.num_classes, in});
    for (double& v : w.data()) v = dist(rng);
    model = make_linear_model(d.shape, std::move(w));
  }
  o.cfg.seed = o.common.seed;
  const TrainResult r = train(model, d, o.cfg);
  model.round_parameters_to_float32();
  const fs::path out_path(o.out);
  if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
  save_model(out_path, model);
  const ClassificationMetrics val = evaluate(model, d.val);
  std::string report = "train: iterations=" + std::to_string(r.iterations) +
                       " reached_target=" + (r.reached_target ? "1" : "0") + "\n";
  report += metrics_line("val", val) + "\n";
  report += metrics_line(d.test.empty() ? "held_out(val)" : "test", evaluate(model, d.test.empty() ? d.val : d.test)) +
            "\n";
  out << report;
  if (!o.metrics.empty()) write_or_print(o.metrics, report, out);
  return 0;
}

// ---------------------------------------------------------------- attribute

struct AttributeOpts {
  Common common;
  std::string model, data, split = "test", methods = "all", gradcam_layer = "conv1", out;
  std::size_t index = 0;
  long long target = -1;
  bool no_normalize = false, saliency_abs = false;
};

void setup_attribute(CLI::App& app, AttributeOpts& o) {
  auto* sub = app.add_subcommand("attribute", "Compute and export heatmaps for one sample");
  add_common(sub, o.common);
  sub->add_option("--model", o.model, "Weight file (.gaxm)")->required();
  sub->add_option("--data", o.data, "Dataset directory")->required();
  sub->add_option("--out", o.out, "Output directory")->required();
  sub->add_option("--split", o.split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  sub->add_option("--index", o.index, "Sample index within the split")->capture_default_str();
  sub->add_option("--method", o.methods, "Comma-separated method list or 'all'")->capture_default_str();
  sub->add_option("--gradcam-layer", o.gradcam_layer)->capture_default_str();
  sub->add_option("--target", o.target, "Target class (default: predicted)");
  sub->add_flag("--no-normalize", o.no_normalize, "Keep raw attribution values");
  sub->add_flag("--saliency-abs", o.saliency_abs, "Saliency as |gradient|");
}

int run_attribute(AttributeOpts& o, std::ostream& out, std::ostream& err) {
  const Model model = load_model(o.model);
  const Dataset d = load_for_model(o.data, model);
  print_warnings(d, err);
  const auto& split = d.split(o.split);
  if (o.index >= split.size()) {
    fail(ErrorCode::invalid_argument, "sample index " + std::to_string(o.index) + " out of range for split " + o.split);
  }
  const Sample& s = split[o.index];
  const std::size_t target = o.target < 0 ? model.predict(s.x).label : static_cast<std::size_t>(o.target);
  ensure_dir(o.out);
  AttributionOptions opts{.saliency_abs = o.saliency_abs, .baseline = {}};
  for (const auto& m : parse_methods(o.methods, o.gradcam_layer)) {
    Heatmap h = attribute(model, s.x, target, m, opts);
    if (!o.no_normalize) h = normalize(std::move(h));
    const auto stem = fs::path(o.out) / (safe_name(s.id) + "." + safe_name(m.str()));
    for (const auto& p : export_heatmap(h, stem)) out << p.string() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- ax-sweep

struct AxSweepOpts {
  Common common;
  std::string model, data, split = "test", methods = "all", variants = "sum,mul", gradcam_layer = "conv1", out;
  std::size_t limit = 0;
  bool no_normalize = false, saliency_abs = false, serial = false;
};

void setup_ax_sweep(CLI::App& app, AxSweepOpts& o) {
  auto* sub = app.add_subcommand("ax-sweep", "CO scores for every sample, method and AX variant");
  add_common(sub, o.common);
  sub->add_option("--model", o.model, "Weight file (.gaxm)")->required();
  sub->add_option("--data", o.data, "Dataset directory")->required();
  sub->add_option("--out", o.out, "Score CSV path ('-' for stdout)")->required();
  sub->add_option("--split", o.split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  sub->add_option("--methods", o.methods, "Comma-separated method list or 'all'")->capture_default_str();
  sub->add_option("--variants", o.variants, "Comma-separated subset of sum,mul")->capture_default_str();
  sub->add_option("--gradcam-layer", o.gradcam_layer)->capture_default_str();
  sub->add_option("--limit", o.limit, "Use only the first N samples (0: all)");
  sub->add_flag("--no-normalize", o.no_normalize, "Skip h / max|h|");
  sub->add_flag("--saliency-abs", o.saliency_abs, "Saliency as |gradient|");
  sub->add_flag("--serial", o.serial, "Disable per-sample parallelism");
}

int run_ax_sweep(AxSweepOpts& o, std::ostream& out, std::ostream& err) {
  const Model model = load_model(o.model);
  const Dataset d = load_for_model(o.data, model);
  print_warnings(d, err);
  const auto samples = pick(d, o.split, o.limit);
  const auto methods = parse_methods(o.methods, o.gradcam_layer);
  std::vector<AxVariant> variants;
  for (const auto& v : split_list(o.variants)) variants.push_back(parse_variant(v));
  if (variants.empty()) fail(ErrorCode::invalid_argument, "no AX variants selected");
  AxSweepOptions opts;
  opts.normalize = !o.no_normalize;
  opts.attribution.saliency_abs = o.saliency_abs;
  opts.policy = o.serial ? ExecPolicy::serial : ExecPolicy::parallel;
  const AxSweepResult r = ax_sweep(model, samples, methods, variants, opts);
  for (const auto& f : r.failures) err << "heatax: warning: " << f.sample_id << " " << f.what << ": " << f.message << "\n";
  write_or_print(o.out, score_csv(r.records), out);
  if (o.out != "-") {
    std::string log;
    for (const auto& f : r.failures) log += f.sample_id + "\t" + f.what + "\t" + f.message + "\n";
    write_text_file(o.out + ".errors.log", log);
  }
  if (o.out != "-") out << "ax-sweep: samples=" << samples.size() << " records=" << r.records.size()
                        << " failures=" << r.failures.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------- gap-stats

struct GapStatsOpts {
  Common common;
  std::string scores, out, hist_dir;
  std::size_t bins = 40;
};

void setup_gap_stats(CLI::App& app, GapStatsOpts& o) {
  auto* sub = app.add_subcommand("gap-stats", "Correct-vs-wrong CO-score statistics from a score CSV");
  add_common(sub, o.common);
  sub->add_option("--scores", o.scores, "Score CSV written by ax-sweep")->required();
  sub->add_option("--out", o.out, "Summary CSV path (default: stdout)");
  sub->add_option("--hist-dir", o.hist_dir, "Directory for per-method histogram CSVs");
  sub->add_option("--bins", o.bins)->capture_default_str();
}

int run_gap_stats(GapStatsOpts& o, std::ostream& out) {
  const auto bytes = read_file_bytes(o.scores);
  const auto records = parse_score_csv(std::string(bytes.begin(), bytes.end()));
  if (records.empty()) fail(ErrorCode::invalid_argument, "gap-stats: score file has no records");
  std::vector<std::pair<MethodTag, AxVariant>> groups;
  for (const auto& r : records) {
    const std::pair<MethodTag, AxVariant> key{r.method, r.variant};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  std::vector<GapStatsRow> rows;
  for (const auto& [m, v] : groups) rows.push_back({m, v, gap_stats(records, m, v)});
  write_or_print(o.out, gap_stats_csv(rows), out);
  if (!o.hist_dir.empty()) {
    ensure_dir(o.hist_dir);
    for (const auto& [m, v] : groups) {
      const auto p = fs::path(o.hist_dir) / ("hist_" + safe_name(m.str()) + "_" + std::string(to_string(v)) + ".csv");
      write_text_file(p, histogram_csv(gap_histogram(records, m, v, o.bins)));
    }
  }
  return 0;
}

// ---------------------------------------------------------------- gax

struct GaxOpts {
  Common common;
  std::string model, data, split = "test", out, bias = "auto";
  std::size_t limit = 100;
  GaxConfig cfg;
  bool serial = false;
};

void setup_gax(CLI::App& app, GaxOpts& o) {
  auto* sub = app.add_subcommand("gax", "Optimize confidence-maximizing heatmaps h = tanh(w*x + b)");
  add_common(sub, o.common);
  sub->add_option("--model", o.model, "Weight file (.gaxm)")->required();
  sub->add_option("--data", o.data, "Dataset directory")->required();
  sub->add_option("--out", o.out, "Output directory")->required();
  sub->add_option("--split", o.split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  sub->add_option("--limit", o.limit, "Use only the first N samples (0: all)")->capture_default_str();
  sub->add_option("--target-co", o.cfg.target_co)->capture_default_str();
  sub->add_option("--max-iter", o.cfg.max_iterations)->capture_default_str();
  sub->add_option("--lr", o.cfg.learning_rate)->capture_default_str();
  sub->add_option("--beta1", o.cfg.beta1)->capture_default_str();
  sub->add_option("--beta2", o.cfg.beta2)->capture_default_str();
  sub->add_option("--ls", o.cfg.similarity_factor, "Similarity loss factor")->capture_default_str();
  sub->add_option("--eps", o.cfg.epsilon)->capture_default_str();
  sub->add_option("--w-init", o.cfg.w_init)->capture_default_str();
  sub->add_option("--bias-init", o.cfg.bias_init)->capture_default_str();
  sub->add_option("--bias", o.bias, "auto (on for sparse datasets) | on | off")
      ->check(CLI::IsMember({"auto", "on", "off"}))
      ->capture_default_str();
  sub->add_option("--snapshot-every", o.cfg.snapshot_every)->capture_default_str();
  sub->add_flag("--allow-incorrect", o.cfg.allow_incorrect, "Also optimize misclassified samples");
  sub->add_flag("--serial", o.serial, "Disable per-sample parallelism");
}

int run_gax(GaxOpts& o, std::ostream& out, std::ostream& err) {
  const Model model = load_model(o.model);
  const Dataset d = load_for_model(o.data, model);
  print_warnings(d, err);
  o.cfg.use_bias = o.bias == "on" || (o.bias == "auto" && d.sparse);
  const auto samples = pick(d, o.split, o.limit);
  const fs::path root(o.out);
  ensure_dir(root / "traces");
  ensure_dir(root / "snapshots");
  ensure_dir(root / "heatmaps");
  for (const auto& s : samples) ensure_dir(root / "snapshots" / safe_name(s.id));
  SweepSnapshotSink sink = [&root](const std::string& id, std::size_t step, const Tensor& h) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%05zu.gaxh", step);
    const fs::path rel = fs::path("snapshots") / safe_name(id) / name;
    save_tensor(root / rel, h);
    return rel.generic_string();
  };
  const GaxSweepResult r = gax_sweep(model, samples, o.cfg, sink, o.serial ? ExecPolicy::serial : ExecPolicy::parallel);
  for (const auto& f : r.failures) err << "heatax: warning: " << f.sample_id << ": " << f.message << "\n";
  std::vector<GaxManifestRow> rows;
  std::size_t converged = 0;
  for (const auto& run : r.runs) {
    const auto& t = run.trace;
    const std::string name = safe_name(t.sample_id);
    const fs::path trace_rel = fs::path("traces") / (name + ".csv");
    write_text_file(root / trace_rel, trace_csv(t));
    std::size_t truth = 0;
    for (const auto& s : samples) {
      if (s.id == t.sample_id) truth = s.label;
    }
    export_heatmap(run.heatmap, "gax", truth, false, root / "heatmaps" / name);
    if (t.aborted) err << "heatax: warning: " << t.sample_id << ": aborted: " << t.abort_reason << "\n";
    GaxManifestRow row{.sample_id = t.sample_id, .trace_path = trace_rel.generic_string(), .snapshot_paths = {},
                       .converged = t.converged, .final_co = t.final_co, .steps = t.iterations.size()};
    for (const auto& snap : t.snapshots) row.snapshot_paths.push_back(snap.ref);
    rows.push_back(std::move(row));
    converged += t.converged ? 1 : 0;
  }
  write_text_file(root / "manifest.csv", gax_manifest_csv(rows));
  out << "gax: runs=" << r.runs.size() << " converged=" << converged << " skipped=" << r.skipped.size()
      << " failed=" << r.failures.size() << " target_co=" << format_real(o.cfg.target_co)
      << " lr=" << format_real(o.cfg.learning_rate) << " bias=" << (o.cfg.use_bias ? "on" : "off") << "\n";
  return 0;
}

// ---------------------------------------------------------------- toy-sweep

struct ToyOpts {
  Common common;
  double a1 = 0.95, a2 = 0.05, keta = 1.2;
  std::size_t points = 97;
  double theta_min = -std::numbers::pi, theta_max = std::numbers::pi;
  std::string out;
};

void setup_toy(CLI::App& app, ToyOpts& o) {
  auto* sub = app.add_subcommand("toy-sweep", "Closed-form heatmaps of the 2D toy model over rotations");
  add_common(sub, o.common);
  sub->add_option("--a1", o.a1)->capture_default_str();
  sub->add_option("--a2", o.a2)->capture_default_str();
  sub->add_option("--keta", o.keta, "Step count times learning rate")->capture_default_str();
  sub->add_option("--points", o.points)->capture_default_str();
  sub->add_option("--theta-min", o.theta_min)->capture_default_str();
  sub->add_option("--theta-max", o.theta_max)->capture_default_str();
  sub->add_option("--out", o.out, "CSV path (default: stdout)");
}

int run_toy(ToyOpts& o, std::ostream& out) {
  const auto rows = toy::rotation_sweep(o.a1, o.a2, o.keta, toy::theta_grid(o.points, o.theta_min, o.theta_max));
  write_or_print(o.out, toy_csv(rows), out);
  return 0;
}

constexpr char kUsage[] =
    "usage: heatax <command> [options]\n"
    "commands: gen-data, train, attribute, ax-sweep, gap-stats, gax, toy-sweep\n"
    "run 'heatax <command> --help' for the options of one command\n";

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  if (raw_args.empty()) {
    err << kUsage;
    return 2;
  }
  CLI::App app("heatax: heatmap augmentative-explanation toolkit", "heatax");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  GenDataOpts gen;
  TrainOpts tr;
  AttributeOpts at;
  AxSweepOpts ax;
  GapStatsOpts gs;
  GaxOpts gx;
  ToyOpts toy;
  setup_gen_data(app, gen);
  setup_train(app, tr);
  setup_attribute(app, at);
  setup_ax_sweep(app, ax);
  setup_gap_stats(app, gs);
  setup_gax(app, gx);
  setup_toy(app, toy);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes the vector from the back
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "heatax: error[usage]: " << e.what() << "\n" << kUsage;
    return 2;
  } catch (const Error& e) {
    err << "heatax: error[" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "gen-data") return run_gen_data(gen, out);
    if (name == "train") return run_train(tr, out, err);
    if (name == "attribute") return run_attribute(at, out, err);
    if (name == "ax-sweep") return run_ax_sweep(ax, out, err);
    if (name == "gap-stats") return run_gap_stats(gs, out);
    if (name == "gax") return run_gax(gx, out, err);
    if (name == "toy-sweep") return run_toy(toy, out);
  } catch (const Error& e) {
    err << "heatax: error[" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "heatax: error[internal]: " << e.what() << "\n";
    return 1;
  }
  err << kUsage;
  return 2;
}

}  // namespace heatax
