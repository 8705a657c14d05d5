#pragma once

#include <algorithm>
#include <cmath>
#include <span>

// Small elementwise helpers shared by the tape ops and the inference path.
namespace tsattr::nn {

inline double relu(double v) { return v > 0.0 ? v : 0.0; }

inline double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

inline void softmax(std::span<const double> z, std::span<double> out) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - m);
    s += out[i];
  }
  for (std::size_t i = 0; i < z.size(); ++i) out[i] /= s;
}

// Sums each row left to right, then divides by the row length.
inline void mean_over_time(std::span<const double> x, int channels, int length, std::span<double> out) {
  for (int c = 0; c < channels; ++c) {
    const double* row = x.data() + static_cast<std::ptrdiff_t>(c) * length;
    double s = 0.0;
    for (int i = 0; i < length; ++i) s += row[i];
    out[c] = s / length;
  }
}

inline void dense(std::span<const double> v, std::span<const double> w, std::span<const double> b,
                  int rows, int cols, std::span<double> out) {
  for (int o = 0; o < rows; ++o) {
    double s = b[o];
    const double* wr = w.data() + static_cast<std::ptrdiff_t>(o) * cols;
    for (int i = 0; i < cols; ++i) s += wr[i] * v[i];
    out[o] = s;
  }
}

}  // namespace tsattr::nn
