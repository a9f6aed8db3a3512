#include "heatax/pnm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "heatax/error.hpp"

namespace heatax {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) fail(ErrorCode::format, "pnm: expected a number in header");
    std::uint64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1u << 30)) fail(ErrorCode::format, "pnm: header value too large");
      ++pos_;
    }
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') fail(ErrorCode::format, "pnm: missing magic");
  const char kind = static_cast<char>(bytes[1]);
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
    fail(ErrorCode::format, std::string("pnm: unsupported type P") + kind);
  }
  HeaderReader r(bytes);
  r.advance(2);
  Image img;
  img.channels = (kind == '3' || kind == '6') ? 3 : 1;
  img.width = r.number();
  img.height = r.number();
  const auto maxval = r.number();
  if (img.width == 0 || img.height == 0) fail(ErrorCode::format, "pnm: zero image dimension");
  if (maxval == 0 || maxval > 65535) fail(ErrorCode::format, "pnm: maxval out of range");
  img.maxval = static_cast<std::uint16_t>(maxval);
  const std::size_t count = img.width * img.height * img.channels;
  img.samples.resize(count);

  if (kind == '2' || kind == '3') {
    for (std::size_t i = 0; i < count; ++i) {
      const auto v = r.number();
      if (v > maxval) fail(ErrorCode::format, "pnm: sample exceeds maxval");
      img.samples[i] = static_cast<std::uint16_t>(v);
    }
    return img;
  }
  // exactly one whitespace byte separates the header from the raster
  if (r.pos() >= bytes.size() || !std::isspace(bytes[r.pos()])) fail(ErrorCode::format, "pnm: malformed header end");
  r.advance(1);
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  if (bytes.size() - r.pos() < count * bytes_per) fail(ErrorCode::format, "pnm: truncated raster");
  const std::uint8_t* p = bytes.data() + r.pos();
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint16_t v = bytes_per == 2 ? static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]) : p[i];
    if (v > maxval) fail(ErrorCode::format, "pnm: sample exceeds maxval");
    img.samples[i] = v;
  }
  return img;
}

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "pnm: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_pnm(bytes);
}

std::vector<std::uint8_t> encode_pnm(const Image& image) {
  if (image.channels != 1 && image.channels != 3) fail(ErrorCode::invalid_argument, "pnm: channels must be 1 or 3");
  if (image.samples.size() != image.width * image.height * image.channels) {
    fail(ErrorCode::invalid_argument, "pnm: sample count does not match dimensions");
  }
  if (image.maxval == 0) fail(ErrorCode::invalid_argument, "pnm: maxval must be positive");
  const std::string header = std::string(image.channels == 3 ? "P6" : "P5") + "\n" + std::to_string(image.width) +
                             " " + std::to_string(image.height) + "\n" + std::to_string(image.maxval) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const bool wide = image.maxval > 255;
  out.reserve(out.size() + image.samples.size() * (wide ? 2 : 1));
  for (auto v : image.samples) {
    if (v > image.maxval) fail(ErrorCode::invalid_argument, "pnm: sample exceeds maxval");
    if (wide) out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

void write_pnm(const std::filesystem::path& path, const Image& image) {
  const auto bytes = encode_pnm(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "pnm: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::io, "pnm: write failed for " + path.string());
}

Tensor image_to_tensor(const Image& image) {
  Tensor t({image.channels, image.height, image.width});
  const double scale = static_cast<double>(image.maxval);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      for (std::size_t c = 0; c < image.channels; ++c) {
        t.at(c, y, x) = image.samples[(y * image.width + x) * image.channels + c] / scale;
      }
    }
  }
  return t;
}

Image tensor_to_image(const Tensor& t, std::uint16_t maxval) {
  if (t.rank() != 3 || (t.dim(0) != 1 && t.dim(0) != 3)) {
    fail(ErrorCode::shape_mismatch, "pnm: tensor must be (1|3, H, W), got " + shape_str(t.shape()));
  }
  Image img;
  img.channels = t.dim(0);
  img.height = t.dim(1);
  img.width = t.dim(2);
  img.maxval = maxval;
  img.samples.resize(t.size());
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) {
        const double v = std::clamp(t.at(c, y, x), 0.0, 1.0);
        img.samples[(y * img.width + x) * img.channels + c] = static_cast<std::uint16_t>(std::lround(v * maxval));
      }
    }
  }
  return img;
}

Image resize_nearest(const Image& image, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) fail(ErrorCode::invalid_argument, "resize: zero target size");
  Image out = image;
  out.height = height;
  out.width = width;
  out.samples.assign(height * width * image.channels, 0);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = y * image.height / height;
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t sx = x * image.width / width;
      for (std::size_t c = 0; c < image.channels; ++c) {
        out.samples[(y * width + x) * image.channels + c] =
            image.samples[(sy * image.width + sx) * image.channels + c];
      }
    }
  }
  return out;
}

Image stack_to_rgb(const Image& grey) {
  if (grey.channels != 1) return grey;
  Image out = grey;
  out.channels = 3;
  out.samples.resize(grey.samples.size() * 3);
  for (std::size_t i = 0; i < grey.samples.size(); ++i) {
    out.samples[3 * i] = out.samples[3 * i + 1] = out.samples[3 * i + 2] = grey.samples[i];
  }
  return out;
}

}  // namespace heatax
