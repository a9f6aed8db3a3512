#include "heatax/formats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "heatax/csv.hpp"
#include "heatax/error.hpp"
#include "heatax/pnm.hpp"

namespace heatax {

namespace {

constexpr char kInputRecord[] = "__input__";
constexpr std::size_t kDescriptorLen = 4;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v & 0xff));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void size32(std::size_t v, const char* what) {
    if (v > 0xffffffffu) fail(ErrorCode::format, std::string(what) + " does not fit in u32");
    u32(static_cast<std::uint32_t>(v));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> b, const char* fmt) : b_(b), fmt_(fmt) {}
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) fail(ErrorCode::format, std::string(fmt_) + ": truncated file");
  }
  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
  const char* fmt_;
};

void write_record(Writer& w, const std::string& name, const Shape& shape, std::span<const double> values) {
  w.size32(name.size(), "record name");
  w.bytes(name.data(), name.size());
  w.size32(shape.size(), "rank");
  for (auto d : shape) w.size32(d, "dimension");
  for (double v : values) w.f32(v);
}

struct Record {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

Record read_record(Reader& r, const char* fmt) {
  Record rec;
  const std::uint32_t name_len = r.u32();
  rec.name = r.str(name_len);
  const std::uint32_t rank = r.u32();
  if (rank == 0 || rank > 8) fail(ErrorCode::format, std::string(fmt) + ": bad rank " + std::to_string(rank));
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t d = r.u32();
    if (d == 0) fail(ErrorCode::format, std::string(fmt) + ": zero dimension");
    rec.shape.push_back(d);
    count *= d;
    if (count > r.remaining() / 4 + 1) fail(ErrorCode::format, std::string(fmt) + ": truncated file");
  }
  r.need(count * 4);
  rec.values.resize(count);
  for (auto& v : rec.values) v = r.f32();
  return rec;
}

std::array<double, kDescriptorLen> descriptor(const Layer& l) {
  const double k = static_cast<double>(static_cast<std::uint8_t>(l.kind));
  switch (l.kind) {
    case LayerKind::conv2d: return {k, static_cast<double>(l.stride), static_cast<double>(l.pad), 0.0};
    case LayerKind::max_pool: return {k, static_cast<double>(l.size), static_cast<double>(l.stride), 0.0};
    case LayerKind::leaky_relu: return {k, l.slope, 0.0, 0.0};
    default: return {k, 0.0, 0.0, 0.0};
  }
}

std::size_t as_count(double v, const char* what) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e7) fail(ErrorCode::format, std::string("gaxm: bad ") + what);
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_model(const Model& model) {
  std::size_t records = 1;
  for (const auto& l : model.layers()) records += l.has_parameters() ? 3 : 1;
  Writer w;
  w.bytes("GAXM", 4);
  w.u16(kGaxmVersion);
  w.size32(records, "record count");
  std::vector<double> in_dims(model.input_shape().begin(), model.input_shape().end());
  write_record(w, kInputRecord, {in_dims.size()}, in_dims);
  for (const auto& l : model.layers()) {
    const auto d = descriptor(l);
    write_record(w, l.name, {kDescriptorLen}, d);
    if (l.has_parameters()) {
      write_record(w, l.name + ".weight", l.weight.shape(), l.weight.data());
      write_record(w, l.name + ".bias", l.bias.shape(), l.bias.data());
    }
  }
  return w.take();
}

Model decode_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "gaxm");
  if (r.str(4) != "GAXM") fail(ErrorCode::format, "gaxm: bad magic");
  const std::uint16_t version = r.u16();
  if (version != kGaxmVersion) fail(ErrorCode::format, "gaxm: unsupported version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  if (count == 0) fail(ErrorCode::format, "gaxm: no records");
  Record in = read_record(r, "gaxm");
  if (in.name != kInputRecord || in.shape.size() != 1) fail(ErrorCode::format, "gaxm: missing input record");
  Shape input;
  for (double d : in.values) input.push_back(as_count(d, "input dimension"));
  std::vector<Layer> layers;
  for (std::uint32_t i = 1; i < count;) {
    Record desc = read_record(r, "gaxm");
    ++i;
    if (desc.shape != Shape{kDescriptorLen}) fail(ErrorCode::format, "gaxm: bad layer descriptor '" + desc.name + "'");
    Layer l;
    l.name = desc.name;
    const std::size_t code = as_count(desc.values[0], "layer kind");
    if (code < 1 || code > 9) fail(ErrorCode::format, "gaxm: unknown layer kind " + std::to_string(code));
    l.kind = static_cast<LayerKind>(code);
    switch (l.kind) {
      case LayerKind::conv2d:
        l.stride = as_count(desc.values[1], "stride");
        l.pad = as_count(desc.values[2], "pad");
        break;
      case LayerKind::max_pool:
        l.size = as_count(desc.values[1], "pool size");
        l.stride = as_count(desc.values[2], "stride");
        break;
      case LayerKind::leaky_relu: l.slope = desc.values[1]; break;
      default: break;
    }
    if (l.has_parameters()) {
      if (i + 2 > count) fail(ErrorCode::format, "gaxm: record count too small");
      Record wr = read_record(r, "gaxm");
      Record br = read_record(r, "gaxm");
      i += 2;
      if (wr.name != l.name + ".weight" || br.name != l.name + ".bias") {
        fail(ErrorCode::format, "gaxm: expected parameters of '" + l.name + "'");
      }
      l.weight = Tensor(wr.shape, std::move(wr.values));
      l.bias = Tensor(br.shape, std::move(br.values));
    }
    layers.push_back(std::move(l));
  }
  if (!r.done()) fail(ErrorCode::format, "gaxm: trailing bytes");
  try {
    return Model(std::move(input), std::move(layers));
  } catch (const Error& e) {
    fail(ErrorCode::format, std::string("gaxm: invalid model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Model& model) { write_file_bytes(path, encode_model(model)); }

Model load_model(const std::filesystem::path& path) { return decode_model(read_file_bytes(path)); }

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.empty()) fail(ErrorCode::invalid_argument, "gaxh: empty tensor");
  Writer w;
  w.bytes("GAXH", 4);
  w.u16(kGaxhVersion);
  w.size32(t.rank(), "rank");
  for (auto d : t.shape()) w.size32(d, "dimension");
  for (double v : t.data()) w.f32(v);
  return w.take();
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "gaxh");
  if (r.str(4) != "GAXH") fail(ErrorCode::format, "gaxh: bad magic");
  const std::uint16_t version = r.u16();
  if (version != kGaxhVersion) fail(ErrorCode::format, "gaxh: unsupported version " + std::to_string(version));
  const std::uint32_t rank = r.u32();
  if (rank == 0 || rank > 8) fail(ErrorCode::format, "gaxh: bad rank " + std::to_string(rank));
  Shape shape;
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t d = r.u32();
    if (d == 0) fail(ErrorCode::format, "gaxh: zero dimension");
    shape.push_back(d);
    count *= d;
    if (count > r.remaining() / 4 + 1) fail(ErrorCode::format, "gaxh: truncated file");
  }
  r.need(count * 4);
  std::vector<double> values(count);
  for (auto& v : values) v = r.f32();
  if (!r.done()) fail(ErrorCode::format, "gaxh: trailing bytes");
  return Tensor(std::move(shape), std::move(values));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) { write_file_bytes(path, encode_tensor(t)); }

Tensor load_tensor(const std::filesystem::path& path) { return decode_tensor(read_file_bytes(path)); }

std::array<std::uint16_t, 3> diverging_rgb(double v) {
  v = std::clamp(v, -1.0, 1.0);
  auto level = [](double f) { return static_cast<std::uint16_t>(std::lround(255.0 * f)); };
  if (v >= 0.0) return {255, level(1.0 - v), level(1.0 - v)};
  return {level(1.0 + v), level(1.0 + v), 255};
}

std::vector<Image> render_heatmap(const Tensor& h) {
  std::size_t channels = 1, height = 1, width = h.size();
  if (h.rank() == 3) {
    channels = h.dim(0);
    height = h.dim(1);
    width = h.dim(2);
  } else if (h.rank() == 2) {
    height = h.dim(0);
    width = h.dim(1);
  }
  const double m = h.max_abs();
  std::vector<Image> out;
  for (std::size_t c = 0; c < channels; ++c) {
    Image img{.width = width, .height = height, .channels = 3, .maxval = 255, .samples = {}};
    img.samples.reserve(width * height * 3);
    for (std::size_t i = 0; i < width * height; ++i) {
      const double v = m > 0.0 ? h[c * width * height + i] / m : 0.0;
      const auto rgb = diverging_rgb(v);
      img.samples.insert(img.samples.end(), rgb.begin(), rgb.end());
    }
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<std::filesystem::path> export_heatmap(const Heatmap& h, const std::filesystem::path& stem) {
  return export_heatmap(h.values, h.method.str(), h.target, h.normalized, stem);
}

std::vector<std::filesystem::path> export_heatmap(const Tensor& values, const std::string& method, std::size_t target,
                                                  bool normalized, const std::filesystem::path& stem) {
  std::vector<std::filesystem::path> written;
  auto with_suffix = [&](const std::string& suffix) {
    auto p = stem;
    p += suffix;
    return p;
  };
  const auto raw = with_suffix(".gaxh");
  save_tensor(raw, values);
  written.push_back(raw);
  const auto images = render_heatmap(values);
  for (std::size_t c = 0; c < images.size(); ++c) {
    const auto p = with_suffix(".c" + std::to_string(c) + ".ppm");
    write_pnm(p, images[c]);
    written.push_back(p);
  }
  std::ostringstream side;
  side << "method=" << method << "\n";
  side << "target=" << target << "\n";
  side << "abs_max=" << format_real(values.max_abs()) << "\n";
  side << "normalized=" << (normalized ? 1 : 0) << "\n";
  side << "shape=" << shape_str(values.shape()) << "\n";
  const auto txt = with_suffix(".txt");
  write_text_file(txt, side.str());
  written.push_back(txt);
  return written;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::io, "read error on '" + path.string() + "'");
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::io, "write error on '" + path.string() + "'");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace heatax
