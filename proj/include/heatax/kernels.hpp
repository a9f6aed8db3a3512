#pragma once

#include <cstddef>
#include <span>

// Dense inner loops used by the autodiff graph. Each kernel exists twice:
// heatax::kernels (OpenMP) and heatax::kernels::serial (plain nested loops,
// kept as the reference the parallel versions are tested and benchmarked
// against). Backward kernels accumulate into their output.
namespace heatax::kernels {

struct Conv2dGeometry {
  std::size_t in_channels = 0, in_height = 0, in_width = 0;
  std::size_t out_channels = 0, kernel_h = 0, kernel_w = 0;
  std::size_t stride = 1, pad = 0;

  std::size_t out_height() const { return (in_height + 2 * pad - kernel_h) / stride + 1; }
  std::size_t out_width() const { return (in_width + 2 * pad - kernel_w) / stride + 1; }
  std::size_t input_size() const { return in_channels * in_height * in_width; }
  std::size_t weight_size() const { return out_channels * in_channels * kernel_h * kernel_w; }
  std::size_t output_size() const { return out_channels * out_height() * out_width(); }
};

// Work (multiply-adds) below which the OpenMP kernels run single-threaded.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

void conv2d_forward(std::span<const double> input, std::span<const double> weight,
                    const Conv2dGeometry& g, std::span<double> output);
void conv2d_backward_input(std::span<const double> grad_output, std::span<const double> weight,
                           const Conv2dGeometry& g, std::span<double> grad_input);
void conv2d_backward_weight(std::span<const double> grad_output, std::span<const double> input,
                            const Conv2dGeometry& g, std::span<double> grad_weight);

// C[m,n] = A[m,k] * B[k,n]
void matmul(std::span<const double> a, std::span<const double> b, std::size_t m, std::size_t k,
            std::size_t n, std::span<double> c);
// dA[m,k] += dC[m,n] * B^T
void matmul_backward_a(std::span<const double> grad_c, std::span<const double> b, std::size_t m,
                       std::size_t k, std::size_t n, std::span<double> grad_a);
// dB[k,n] += A^T * dC[m,n]
void matmul_backward_b(std::span<const double> grad_c, std::span<const double> a, std::size_t m,
                       std::size_t k, std::size_t n, std::span<double> grad_b);

namespace serial {

void conv2d_forward(std::span<const double> input, std::span<const double> weight,
                    const Conv2dGeometry& g, std::span<double> output);
void conv2d_backward_input(std::span<const double> grad_output, std::span<const double> weight,
                           const Conv2dGeometry& g, std::span<double> grad_input);
void conv2d_backward_weight(std::span<const double> grad_output, std::span<const double> input,
                            const Conv2dGeometry& g, std::span<double> grad_weight);
void matmul(std::span<const double> a, std::span<const double> b, std::size_t m, std::size_t k,
            std::size_t n, std::span<double> c);
void matmul_backward_a(std::span<const double> grad_c, std::span<const double> b, std::size_t m,
                       std::size_t k, std::size_t n, std::span<double> grad_a);
void matmul_backward_b(std::span<const double> grad_c, std::span<const double> a, std::size_t m,
                       std::size_t k, std::size_t n, std::span<double> grad_b);

}  // namespace serial
}  // namespace heatax::kernels
