#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "heatax/attribution.hpp"
#include "heatax/model.hpp"
#include "heatax/pnm.hpp"
#include "heatax/tensor.hpp"

namespace heatax {

inline constexpr std::uint16_t kGaxmVersion = 1;
inline constexpr std::uint16_t kGaxhVersion = 1;

/// GAXM weight file. Values are stored as float32, so a model survives the
/// round trip exactly only after Model::round_parameters_to_float32().
std::vector<std::uint8_t> encode_model(const Model& model);
Model decode_model(std::span<const std::uint8_t> bytes);
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

/// GAXH raw tensor file.
std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);
void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

/// Diverging colour for v clamped to [-1, 1]: +1 red, 0 white, -1 blue.
std::array<std::uint16_t, 3> diverging_rgb(double v);

/// One PPM per channel of a rank-3 heatmap (a rank-1 map is rendered as a
/// single row), colour-mapped after dividing by abs-max.
std::vector<Image> render_heatmap(const Tensor& h);

/// Writes <stem>.gaxh, <stem>.c<k>.ppm per channel and <stem>.txt with
/// method, target and abs-max. Returns the paths written.
std::vector<std::filesystem::path> export_heatmap(const Heatmap& h, const std::filesystem::path& stem);
std::vector<std::filesystem::path> export_heatmap(const Tensor& values, const std::string& method, std::size_t target,
                                                  bool normalized, const std::filesystem::path& stem);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace heatax
