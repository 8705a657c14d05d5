#pragma once

#include <span>

// Dense numeric kernels shared by the tape ops and the tape-free inference
// path. Both paths must produce bit-identical activations, so every output
// element is accumulated in the same order regardless of which time range is
// requested: bias first, then input channels ascending, then kernel taps
// ascending.
//
// Layouts are channel-major: a [channels x length] activation stores channel c
// at [c * length, (c + 1) * length). Padded inputs carry `pad` zeros on each
// side of every channel row, so a row has length + 2 * pad entries.
namespace tsattr::kernels {

struct ConvShape {
  int in_channels;
  int out_channels;
  int kernel;  // odd
  int length;

  int pad() const { return kernel / 2; }
  int padded_length() const { return length + 2 * pad(); }
};

// Copies [channels x length] into a zero-padded [channels x (length + 2 pad)].
void pad_rows(std::span<const double> in, int channels, int length, int pad, std::span<double> out);

// out[co][t] for t in [t_begin, t_end). `weights` is [out][in][kernel].
void conv1d_forward(const ConvShape& shape, std::span<const double> padded_in,
                    std::span<const double> weights, std::span<const double> bias,
                    std::span<double> out, int t_begin, int t_end);

// Accumulates gradients. Any of the output spans may be empty to skip it;
// grad_padded_in is padded like the forward input.
void conv1d_backward(const ConvShape& shape, std::span<const double> padded_in,
                     std::span<const double> weights, std::span<const double> grad_out,
                     std::span<double> grad_padded_in, std::span<double> grad_weights,
                     std::span<double> grad_bias);

}  // namespace tsattr::kernels
