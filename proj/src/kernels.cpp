#include "heatax/kernels.hpp"

#include <algorithm>

namespace heatax::kernels {

namespace {

// Half-open range of output positions whose tap `k` lands inside [0, extent).
struct TapRange {
  std::size_t begin, end;
};

inline TapRange valid_outputs(std::size_t k, std::size_t stride, std::size_t pad, std::size_t extent,
                              std::size_t out_extent) {
  // need o*stride + k - pad in [0, extent)
  std::size_t begin = 0;
  if (pad > k) begin = (pad - k + stride - 1) / stride;
  if (extent + pad <= k) return {0, 0};
  std::size_t end = (extent - 1 + pad - k) / stride + 1;
  end = std::min(end, out_extent);
  if (begin > end) begin = end;
  return {begin, end};
}

inline std::size_t tap_source(std::size_t o, std::size_t k, std::size_t stride, std::size_t pad) {
  return o * stride + k - pad;
}

}  // namespace

void conv2d_forward(std::span<const double> input, std::span<const double> weight,
                    const Conv2dGeometry& g, std::span<double> output) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const std::size_t work = g.output_size() * g.in_channels * g.kernel_h * g.kernel_w;
  const auto out_channels = static_cast<std::ptrdiff_t>(g.out_channels);

#pragma omp parallel for schedule(static) if (work > kParallelThreshold)
  for (std::ptrdiff_t oi = 0; oi < out_channels; ++oi) {
    const auto o = static_cast<std::size_t>(oi);
    double* out = output.data() + o * oh * ow;
    std::fill(out, out + oh * ow, 0.0);
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      const double* in = input.data() + c * g.in_height * g.in_width;
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const TapRange ys = valid_outputs(ky, g.stride, g.pad, g.in_height, oh);
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          const TapRange xs = valid_outputs(kx, g.stride, g.pad, g.in_width, ow);
          const double w = weight[((o * g.in_channels + c) * g.kernel_h + ky) * g.kernel_w + kx];
          for (std::size_t y = ys.begin; y < ys.end; ++y) {
            const double* in_row = in + tap_source(y, ky, g.stride, g.pad) * g.in_width;
            double* out_row = out + y * ow;
            for (std::size_t x = xs.begin; x < xs.end; ++x) {
              out_row[x] += w * in_row[tap_source(x, kx, g.stride, g.pad)];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_input(std::span<const double> grad_output, std::span<const double> weight,
                           const Conv2dGeometry& g, std::span<double> grad_input) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const std::size_t work = g.output_size() * g.in_channels * g.kernel_h * g.kernel_w;
  const auto in_channels = static_cast<std::ptrdiff_t>(g.in_channels);

  // Each thread owns whole input planes.
#pragma omp parallel for schedule(static) if (work > kParallelThreshold)
  for (std::ptrdiff_t ci = 0; ci < in_channels; ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    double* gin = grad_input.data() + c * g.in_height * g.in_width;
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      const double* gout = grad_output.data() + o * oh * ow;
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const TapRange ys = valid_outputs(ky, g.stride, g.pad, g.in_height, oh);
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          const TapRange xs = valid_outputs(kx, g.stride, g.pad, g.in_width, ow);
          const double w = weight[((o * g.in_channels + c) * g.kernel_h + ky) * g.kernel_w + kx];
          for (std::size_t y = ys.begin; y < ys.end; ++y) {
            double* gin_row = gin + tap_source(y, ky, g.stride, g.pad) * g.in_width;
            const double* gout_row = gout + y * ow;
            for (std::size_t x = xs.begin; x < xs.end; ++x) {
              gin_row[tap_source(x, kx, g.stride, g.pad)] += w * gout_row[x];
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
  const std::size_t work = g.output_size() * g.in_channels * g.kernel_h * g.kernel_w;
  const auto out_channels = static_cast<std::ptrdiff_t>(g.out_channels);

#pragma omp parallel for schedule(static) if (work > kParallelThreshold)
  for (std::ptrdiff_t oi = 0; oi < out_channels; ++oi) {
    const auto o = static_cast<std::size_t>(oi);
    const double* gout = grad_output.data() + o * oh * ow;
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      const double* in = input.data() + c * g.in_height * g.in_width;
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const TapRange ys = valid_outputs(ky, g.stride, g.pad, g.in_height, oh);
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          const TapRange xs = valid_outputs(kx, g.stride, g.pad, g.in_width, ow);
          double acc = 0.0;
          for (std::size_t y = ys.begin; y < ys.end; ++y) {
            const double* in_row = in + tap_source(y, ky, g.stride, g.pad) * g.in_width;
            const double* gout_row = gout + y * ow;
            for (std::size_t x = xs.begin; x < xs.end; ++x) {
              acc += gout_row[x] * in_row[tap_source(x, kx, g.stride, g.pad)];
            }
          }
          grad_weight[((o * g.in_channels + c) * g.kernel_h + ky) * g.kernel_w + kx] += acc;
        }
      }
    }
  }
}

void matmul(std::span<const double> a, std::span<const double> b, std::size_t m, std::size_t k,
            std::size_t n, std::span<double> c) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelThreshold)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* c_row = c.data() + i * n;
    std::fill(c_row, c_row + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double a_ip = a[i * k + p];
      const double* b_row = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += a_ip * b_row[j];
    }
  }
}

void matmul_backward_a(std::span<const double> grad_c, std::span<const double> b, std::size_t m,
                       std::size_t k, std::size_t n, std::span<double> grad_a) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelThreshold)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* gc_row = grad_c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* b_row = b.data() + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += gc_row[j] * b_row[j];
      grad_a[i * k + p] += acc;
    }
  }
}

void matmul_backward_b(std::span<const double> grad_c, std::span<const double> a, std::size_t m,
                       std::size_t k, std::size_t n, std::span<double> grad_b) {
  const auto inner = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelThreshold)
  for (std::ptrdiff_t pi = 0; pi < inner; ++pi) {
    const auto p = static_cast<std::size_t>(pi);
    double* gb_row = grad_b.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double a_ip = a[i * k + p];
      const double* gc_row = grad_c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) gb_row[j] += a_ip * gc_row[j];
    }
  }
}

}  // namespace heatax::kernels
