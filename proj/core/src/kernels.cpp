#include "tsattr/kernels.hpp"

#include <algorithm>

namespace tsattr::kernels {

void pad_rows(std::span<const double> in, int channels, int length, int pad, std::span<double> out) {
  const int row = length + 2 * pad;
  for (int c = 0; c < channels; ++c) {
    double* dst = out.data() + static_cast<std::ptrdiff_t>(c) * row;
    std::fill(dst, dst + pad, 0.0);
    std::copy_n(in.data() + static_cast<std::ptrdiff_t>(c) * length, length, dst + pad);
    std::fill(dst + pad + length, dst + row, 0.0);
  }
}

void conv1d_forward(const ConvShape& shape, std::span<const double> padded_in,
                    std::span<const double> weights, std::span<const double> bias,
                    std::span<double> out, int t_begin, int t_end) {
  const int len = shape.length;
  const int prow = shape.padded_length();
  const int k = shape.kernel;
  const int count = t_end - t_begin;
  if (count <= 0) return;
  for (int co = 0; co < shape.out_channels; ++co) {
    double* __restrict o = out.data() + static_cast<std::ptrdiff_t>(co) * len + t_begin;
    const double b = bias[co];
    for (int t = 0; t < count; ++t) o[t] = b;
    const double* wrow = weights.data() + static_cast<std::ptrdiff_t>(co) * shape.in_channels * k;
    for (int ci = 0; ci < shape.in_channels; ++ci) {
      const double* __restrict in = padded_in.data() + static_cast<std::ptrdiff_t>(ci) * prow + t_begin;
      const double* w = wrow + ci * k;
      for (int j = 0; j < k; ++j) {
        const double wv = w[j];
        const double* __restrict src = in + j;
        for (int t = 0; t < count; ++t) o[t] += wv * src[t];
      }
    }
  }
}

void conv1d_backward(const ConvShape& shape, std::span<const double> padded_in,
                     std::span<const double> weights, std::span<const double> grad_out,
                     std::span<double> grad_padded_in, std::span<double> grad_weights,
                     std::span<double> grad_bias) {
  const int len = shape.length;
  const int prow = shape.padded_length();
  const int k = shape.kernel;
  for (int co = 0; co < shape.out_channels; ++co) {
    const double* __restrict g = grad_out.data() + static_cast<std::ptrdiff_t>(co) * len;
    if (!grad_bias.empty()) {
      double s = 0.0;
      for (int t = 0; t < len; ++t) s += g[t];
      grad_bias[co] += s;
    }
    const std::ptrdiff_t wbase = static_cast<std::ptrdiff_t>(co) * shape.in_channels * k;
    for (int ci = 0; ci < shape.in_channels; ++ci) {
      const std::ptrdiff_t in_off = static_cast<std::ptrdiff_t>(ci) * prow;
      for (int j = 0; j < k; ++j) {
        if (!grad_weights.empty()) {
          const double* __restrict src = padded_in.data() + in_off + j;
          // Eight lane-wise partial sums let the compiler vectorise the
          // reduction without reassociation flags.
          double part[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
          int t = 0;
          for (; t + 8 <= len; t += 8) {
            for (int l = 0; l < 8; ++l) part[l] += g[t + l] * src[t + l];
          }
          double s = ((part[0] + part[1]) + (part[2] + part[3])) + ((part[4] + part[5]) + (part[6] + part[7]));
          for (; t < len; ++t) s += g[t] * src[t];
          grad_weights[wbase + ci * k + j] += s;
        }
        if (!grad_padded_in.empty()) {
          const double wv = weights[wbase + ci * k + j];
          double* __restrict dst = grad_padded_in.data() + in_off + j;
          for (int t = 0; t < len; ++t) dst[t] += wv * g[t];
        }
      }
    }
  }
}

}  // namespace tsattr::kernels
