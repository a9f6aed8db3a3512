#include "heatax/kernels.hpp"

namespace heatax::kernels::serial {

namespace {

// Input coordinate for output position `o` and kernel tap `k`; false when the tap
// lands in padding.
inline bool source_index(std::size_t o, std::size_t k, std::size_t stride, std::size_t pad,
                         std::size_t extent, std::size_t& src) {
  const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(o * stride + k) - static_cast<std::ptrdiff_t>(pad);
  if (s < 0 || s >= static_cast<std::ptrdiff_t>(extent)) return false;
  src = static_cast<std::size_t>(s);
  return true;
}

}  // namespace

void conv2d_forward(std::span<const double> input, std::span<const double> weight,
                    const Conv2dGeometry& g, std::span<double> output) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (std::size_t c = 0; c < g.in_channels; ++c) {
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
            std::size_t sy;
            if (!source_index(y, ky, g.stride, g.pad, g.in_height, sy)) continue;
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
              std::size_t sx;
              if (!source_index(x, kx, g.stride, g.pad, g.in_width, sx)) continue;
              acc += weight[((o * g.in_channels + c) * g.kernel_h + ky) * g.kernel_w + kx] *
                     input[(c * g.in_height + sy) * g.in_width + sx];
            }
          }
        }
        output[(o * oh + y) * ow + x] = acc;
      }
    }
  }
}

void conv2d_backward_input(std::span<const double> grad_output, std::span<const double> weight,
                           const Conv2dGeometry& g, std::span<double> grad_input) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const double go = grad_output[(o * oh + y) * ow + x];
        for (std::size_t c = 0; c < g.in_channels; ++c) {
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
            std::size_t sy;
            if (!source_index(y, ky, g.stride, g.pad, g.in_height, sy)) continue;
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
              std::size_t sx;
              if (!source_index(x, kx, g.stride, g.pad, g.in_width, sx)) continue;
              grad_input[(c * g.in_height + sy) * g.in_width + sx] +=
                  go * weight[((o * g.in_channels + c) * g.kernel_h + ky) * g.kernel_w + kx];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_weight(std::span<const double> grad_output, std::span<const double> input,
                            const Conv2dGeometry& g, std::span<double> grad_weight) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const double go = grad_output[(o * oh + y) * ow + x];
        for (std::size_t c = 0; c < g.in_channels; ++c) {
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
            std::size_t sy;
            if (!source_index(y, ky, g.stride, g.pad, g.in_height, sy)) continue;
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
              std::size_t sx;
              if (!source_index(x, kx, g.stride, g.pad, g.in_width, sx)) continue;
              grad_weight[((o * g.in_channels + c) * g.kernel_h + ky) * g.kernel_w + kx] +=
                  go * input[(c * g.in_height + sy) * g.in_width + sx];
            }
          }
        }
      }
    }
  }
}

void matmul(std::span<const double> a, std::span<const double> b, std::size_t m, std::size_t k,
            std::size_t n, std::span<double> c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

void matmul_backward_a(std::span<const double> grad_c, std::span<const double> b, std::size_t m,
                       std::size_t k, std::size_t n, std::span<double> grad_a) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += grad_c[i * n + j] * b[p * n + j];
      grad_a[i * k + p] += acc;
    }
  }
}

void matmul_backward_b(std::span<const double> grad_c, std::span<const double> a, std::size_t m,
                       std::size_t k, std::size_t n, std::span<double> grad_b) {
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += a[i * k + p] * grad_c[i * n + j];
      grad_b[p * n + j] += acc;
    }
  }
}

}  // namespace heatax::kernels::serial
