#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "heatax/tensor.hpp"

namespace heatax {

/// Netpbm grey (PGM, 1 channel) or colour (PPM, 3 channel) image with
/// interleaved samples.
struct Image {
  std::size_t width = 0, height = 0, channels = 1;
  std::uint16_t maxval = 255;
  std::vector<std::uint16_t> samples;

  bool operator==(const Image&) const = default;
};

/// Accepts P2/P3 (ASCII) and P5/P6 (binary, 8- or 16-bit big-endian) with
/// '#' comments in the header.
Image decode_pnm(std::span<const std::uint8_t> bytes);
Image read_pnm(const std::filesystem::path& path);

/// Binary P5/P6; 16-bit samples when maxval > 255.
std::vector<std::uint8_t> encode_pnm(const Image& image);
void write_pnm(const std::filesystem::path& path, const Image& image);

/// (channels, height, width) tensor scaled to [0,1].
Tensor image_to_tensor(const Image& image);
/// Inverse of image_to_tensor; values are clamped to [0,1] then rounded.
Image tensor_to_image(const Tensor& t, std::uint16_t maxval = 255);

Image resize_nearest(const Image& image, std::size_t height, std::size_t width);
/// Replicates a grey image into 3 identical channels.
Image stack_to_rgb(const Image& grey);

}  // namespace heatax
