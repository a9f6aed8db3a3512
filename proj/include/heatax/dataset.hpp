#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "heatax/tensor.hpp"

namespace heatax {

struct Sample {
  std::string id;  // "<split>/<class dir>/<stem>"
  Tensor x;        // (C,H,W) in [0,1]
  std::size_t label = 0;
};

struct Dataset {
  std::size_t num_classes = 0;
  Shape shape;
  std::vector<Sample> train, val, test;
  std::vector<std::string> class_names;
  bool sparse = false;                // many exact-zero pixels ("dark" images)
  std::vector<std::string> warnings;  // files skipped during ingestion

  const std::vector<Sample>& split(std::string_view name) const;
};

/// Class-conditional images: a Gaussian intensity blob at a class-dependent
/// location plus pixel noise, quantized to 8-bit levels so a write/read
/// round trip through PPM/PGM is exact.
struct BlobSpec {
  std::size_t classes = 2;
  std::size_t channels = 3, height = 32, width = 32;
  std::size_t n_train = 0, n_val = 0, n_test = 0;
  std::uint64_t seed = 0;
  double background = 0.35;
  double signal = 0.5;
  double noise = 0.08;     // std of per-pixel Gaussian noise
  double jitter = 2.0;     // max blob-centre offset in pixels
  double label_noise = 0.0;       // probability a train/val label is replaced
  double test_label_noise = 0.0;  // same for the test split
  bool dark = false;              // zero background (sparse images)
};

Dataset make_blobs(const BlobSpec& spec);

/// Writes <dir>/{train,val,test}/class_NN/<stem>.{ppm|pgm} plus manifest.txt.
void write_dataset(const Dataset& data, const BlobSpec& spec, const std::filesystem::path& dir);

struct IngestOptions {
  std::size_t height = 0, width = 0;  // 0: keep manifest / first image size
  bool stack_gray = false;            // replicate 1-channel images to 3 channels
};

/// Loads a directory of per-class subfolders of PGM/PPM files, either under
/// train/ val/ test/ split folders or directly (everything lands in test).
/// Reads manifest.txt when present. Unreadable files are skipped with a
/// warning; an empty class folder next to non-empty ones is an error.
Dataset load_dataset(const std::filesystem::path& dir, const IngestOptions& opts = {});

/// Channel-wise (x - mean) / std, the optional classification-path normalization.
struct ChannelAffine {
  std::vector<double> mean, std;
  Tensor apply(const Tensor& x) const;
};

}  // namespace heatax
