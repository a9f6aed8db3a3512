#include "heatax/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "heatax/error.hpp"
#include "heatax/pnm.hpp"

namespace fs = std::filesystem;

namespace heatax {

const std::vector<Sample>& Dataset::split(std::string_view name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  fail(ErrorCode::invalid_argument, "dataset: unknown split '" + std::string(name) + "'");
}

namespace {

constexpr const char* kSplits[] = {"train", "val", "test"};

std::string class_dir_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "class_%02zu", k);
  return buf;
}

std::string stem_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

std::vector<Sample> make_split(const BlobSpec& spec, std::size_t split_index, std::size_t count,
                               double label_noise) {
  // Each split has its own stream so changing one count leaves the others intact.
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(split_index), 0x9e3779b9u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double cy0 = (spec.height - 1) / 2.0, cx0 = (spec.width - 1) / 2.0;
  const double radius = 0.25 * static_cast<double>(std::min(spec.height, spec.width));
  const double sigma = std::max(1.0, static_cast<double>(std::min(spec.height, spec.width)) / 8.0);
  const double bg = spec.dark ? 0.0 : spec.background;

  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t cls = i % spec.classes;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(cls) / static_cast<double>(spec.classes) +
                         std::numbers::pi / 4.0;
    const double cy = cy0 + radius * std::sin(angle) + spec.jitter * (2.0 * unit(rng) - 1.0);
    const double cx = cx0 + radius * std::cos(angle) + spec.jitter * (2.0 * unit(rng) - 1.0);
    Tensor x({spec.channels, spec.height, spec.width});
    for (std::size_t c = 0; c < spec.channels; ++c) {
      for (std::size_t y = 0; y < spec.height; ++y) {
        for (std::size_t xx = 0; xx < spec.width; ++xx) {
          const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(xx) - cx;
          const double blob = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
          double v = bg + spec.signal * blob + spec.noise * noise(rng);
          v = std::clamp(v, 0.0, 1.0);
          x.at(c, y, xx) = std::round(v * 255.0) / 255.0;
        }
      }
    }
    std::size_t label = cls;
    if (label_noise > 0.0 && unit(rng) < label_noise) {
      std::uniform_int_distribution<std::size_t> other(1, spec.classes - 1);
      label = (cls + other(rng)) % spec.classes;
    }
    Sample s;
    s.id = std::string(kSplits[split_index]) + "/" + class_dir_name(label) + "/" + stem_name(i);
    s.x = std::move(x);
    s.label = label;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

Dataset make_blobs(const BlobSpec& spec) {
  if (spec.classes < 2) fail(ErrorCode::invalid_argument, "blobs: need at least 2 classes");
  if (spec.channels == 0 || spec.height == 0 || spec.width == 0) fail(ErrorCode::invalid_argument, "blobs: empty image shape");
  Dataset d;
  d.num_classes = spec.classes;
  d.shape = {spec.channels, spec.height, spec.width};
  for (std::size_t k = 0; k < spec.classes; ++k) d.class_names.push_back(class_dir_name(k));
  d.train = make_split(spec, 0, spec.n_train, spec.label_noise);
  d.val = make_split(spec, 1, spec.n_val, spec.label_noise);
  d.test = make_split(spec, 2, spec.n_test, spec.test_label_noise);
  d.sparse = spec.dark;
  return d;
}

void write_dataset(const Dataset& data, const BlobSpec& spec, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "gen-data: cannot create " + dir.string() + ": " + ec.message());
  const bool colour = spec.channels == 3;
  if (spec.channels != 1 && spec.channels != 3) fail(ErrorCode::invalid_argument, "gen-data: channels must be 1 or 3");
  for (std::size_t si = 0; si < 3; ++si) {
    for (std::size_t k = 0; k < data.num_classes; ++k) {
      fs::create_directories(dir / kSplits[si] / class_dir_name(k), ec);
      if (ec) fail(ErrorCode::io, "gen-data: cannot create split directory: " + ec.message());
    }
    for (const auto& s : data.split(kSplits[si])) {
      write_pnm(dir / (s.id + (colour ? ".ppm" : ".pgm")), tensor_to_image(s.x));
    }
  }
  std::ofstream m(dir / "manifest.txt");
  if (!m) fail(ErrorCode::io, "gen-data: cannot write manifest");
  m << "format=heatax-dataset\n"
    << "version=1\n"
    << "kind=synthetic-blobs\n"
    << "classes=" << spec.classes << "\n"
    << "channels=" << spec.channels << "\n"
    << "height=" << spec.height << "\n"
    << "width=" << spec.width << "\n"
    << "train=" << spec.n_train << "\n"
    << "val=" << spec.n_val << "\n"
    << "test=" << spec.n_test << "\n"
    << "seed=" << spec.seed << "\n"
    << "sparse=" << (spec.dark ? 1 : 0) << "\n";
}

namespace {

std::map<std::string, std::string> read_manifest(const fs::path& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || line.empty() || line[0] == '#') continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_pnm(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

}  // namespace

Dataset load_dataset(const fs::path& dir, const IngestOptions& opts) {
  if (!fs::is_directory(dir)) fail(ErrorCode::io, "dataset: not a directory: " + dir.string());
  Dataset d;
  std::size_t height = opts.height, width = opts.width, channels = 0;
  bool manifest_sparse = false;
  std::size_t manifest_classes = 0, manifest_channels = 0;
  if (fs::exists(dir / "manifest.txt")) {
    auto kv = read_manifest(dir / "manifest.txt");
    if (height == 0 && kv.count("height")) height = std::stoul(kv["height"]);
    if (width == 0 && kv.count("width")) width = std::stoul(kv["width"]);
    if (kv.count("classes")) manifest_classes = std::stoul(kv["classes"]);
    if (kv.count("channels")) manifest_channels = std::stoul(kv["channels"]);
    manifest_sparse = kv.count("sparse") && kv["sparse"] == "1";
  }

  std::vector<std::pair<std::string, fs::path>> split_dirs;
  for (const char* s : kSplits) {
    if (fs::is_directory(dir / s)) split_dirs.emplace_back(s, dir / s);
  }
  if (split_dirs.empty()) split_dirs.emplace_back("test", dir);

  std::set<std::string> class_set;
  for (const auto& [name, sdir] : split_dirs) {
    for (const auto& c : sorted_entries(sdir, true)) class_set.insert(c.filename().string());
  }
  d.class_names.assign(class_set.begin(), class_set.end());
  d.num_classes = std::max(d.class_names.size(), manifest_classes);
  if (d.num_classes < 2) fail(ErrorCode::invalid_argument, "dataset: need at least 2 class folders in " + dir.string());

  std::size_t zero_count = 0, total_count = 0;
  for (const auto& [split, sdir] : split_dirs) {
    std::vector<Sample> samples;
    std::vector<std::string> empty_classes;
    std::size_t nonempty = 0;
    for (std::size_t label = 0; label < d.class_names.size(); ++label) {
      const fs::path cdir = sdir / d.class_names[label];
      if (!fs::is_directory(cdir)) {
        empty_classes.push_back(d.class_names[label]);
        continue;
      }
      std::size_t loaded = 0;
      for (const auto& f : sorted_entries(cdir, false)) {
        if (!is_pnm(f)) continue;
        Image img;
        try {
          img = read_pnm(f);
        } catch (const Error& e) {
          d.warnings.push_back("skipped " + f.string() + ": " + e.what());
          continue;
        }
        if (opts.stack_gray) img = stack_to_rgb(img);
        if (height == 0) height = img.height;
        if (width == 0) width = img.width;
        if (channels == 0) channels = img.channels;
        if (img.channels != channels) {
          fail(ErrorCode::shape_mismatch, "dataset: " + f.string() + " has " + std::to_string(img.channels) +
                                              " channels, expected " + std::to_string(channels));
        }
        if (img.height != height || img.width != width) img = resize_nearest(img, height, width);
        Sample s;
        s.id = split + "/" + d.class_names[label] + "/" + f.stem().string();
        s.x = image_to_tensor(img);
        s.label = label;
        for (double v : s.x.data()) zero_count += v == 0.0;
        total_count += s.x.size();
        samples.push_back(std::move(s));
        ++loaded;
      }
      if (loaded == 0) {
        empty_classes.push_back(d.class_names[label]);
      } else {
        ++nonempty;
      }
    }
    if (nonempty > 0 && !empty_classes.empty()) {
      fail(ErrorCode::invalid_argument, "dataset: empty class folder '" + empty_classes.front() + "' in " + sdir.string());
    }
    if (split == "train") d.train = std::move(samples);
    if (split == "val") d.val = std::move(samples);
    if (split == "test") d.test = std::move(samples);
  }
  if (channels == 0) channels = opts.stack_gray || manifest_channels == 0 ? 3 : manifest_channels;
  d.shape = {channels, height, width};
  d.sparse = manifest_sparse || (total_count > 0 && 2 * zero_count > total_count);
  return d;
}

Tensor ChannelAffine::apply(const Tensor& x) const {
  if (x.rank() != 3 || mean.size() != x.dim(0) || std.size() != x.dim(0)) {
    fail(ErrorCode::shape_mismatch, "normalize: mean/std length must match channels of " + shape_str(x.shape()));
  }
  Tensor out = x;
  const std::size_t plane = x.dim(1) * x.dim(2);
  for (std::size_t c = 0; c < x.dim(0); ++c) {
    if (std[c] <= 0) fail(ErrorCode::invalid_argument, "normalize: std must be positive");
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = (x[c * plane + i] - mean[c]) / std[c];
  }
  return out;
}

}  // namespace heatax
