#pragma once

// Normalised spectral loss
//   L = sum_m || h_L * (Y_m - Yhat_m) ||^2 / sum_m || h_L * Y_m ||^2
// over half spectra. Bins carry one-sided power weights (DC and Nyquist once,
// interior bins twice) so that with h_L = 1 the ratio equals the time-domain
// error-to-signal ratio of the frames.

#include <optional>
#include <span>
#include <vector>

#include "modfx/cplx.hpp"
#include "modfx/spectral.hpp"

namespace modfx {

struct SpectralBatch {
  std::vector<HalfSpectrum> inputs;       // X_m
  std::vector<HalfSpectrum> targets;      // Y_m
  std::vector<std::size_t> frame_index;   // LUT index of each frame; empty = 0..M-1
  std::optional<HalfSpectrum> emphasis;   // h_L; absent = all ones

  std::size_t size() const { return inputs.size(); }
  std::size_t lut_index(std::size_t i) const { return frame_index.empty() ? i : frame_index[i]; }
};

/// Per-bin weights w_k = parseval_k * |h_L(k)|^2.
std::vector<double> loss_weights(std::size_t dft_length, const std::optional<HalfSpectrum>& emphasis);

/// sum_k w_k |Y(k)|^2 over all target frames. Throws DegenerateError if zero.
double loss_denominator(std::span<const HalfSpectrum> targets, std::span<const double> weights);

/// Adds sum_k w_k |Y(k) - Yhat(k)|^2 for one frame to `acc`.
template <class T>
void accumulate_residual(const HalfSpectrum& target, const std::vector<Cplx<T>>& predicted,
                         std::span<const double> weights, T& acc)
{
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const T er = T(target[k].real()) - predicted[k].re;
    const T ei = T(target[k].imag()) - predicted[k].im;
    acc = acc + T(weights[k]) * (er * er + ei * ei);
  }
}

} // namespace modfx
