#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "modfx/svf.hpp"

namespace modfx {

using complex = std::complex<double>;

/// Nonnegative-frequency half of an N-point DFT: N/2+1 bins, DC first,
/// Nyquist last.
struct HalfSpectrum {
  std::size_t n = 0;
  std::vector<complex> bins;

  HalfSpectrum() = default;
  explicit HalfSpectrum(std::size_t dft_length, complex fill = {0.0, 0.0});

  std::size_t size() const { return bins.size(); }
  complex& operator[](std::size_t k) { return bins[k]; }
  const complex& operator[](std::size_t k) const { return bins[k]; }
};

/// z[k] = exp(2 pi j k / N) for k = 0..N/2, plus the cached inverse.
struct FreqGrid {
  std::size_t n = 0;
  std::vector<complex> z;
  std::vector<complex> zinv;

  explicit FreqGrid(std::size_t dft_length);
  std::size_t size() const { return z.size(); }
};

HalfSpectrum rfft(std::span<const double> frame);
HalfSpectrum rfft(std::span<const double> frame, std::size_t dft_length); // zero-padded

/// Inverse of rfft. Imaginary parts of the DC and Nyquist bins are ignored.
std::vector<double> irfft(const HalfSpectrum& spec);

HalfSpectrum delay_response(double delay, const FreqGrid& grid);

/// A_p(k)^K with A_p = (p - z^-1) / (1 - p z^-1). Throws InstabilityError for |p| >= 1.
HalfSpectrum apf_cascade_response(double pole, int sections, const FreqGrid& grid);

/// Throws NumericError if the denominator vanishes at any bin.
HalfSpectrum svf_response(const SVFParams& params, const FreqGrid& grid);

HalfSpectrum multiply(const HalfSpectrum& a, const HalfSpectrum& b);

/// One-sided power weights: 1 at DC and Nyquist, 2 elsewhere. With these,
/// sum_k w_k |X(k)|^2 / N equals the time-domain energy of the frame.
std::vector<double> parseval_weights(std::size_t dft_length);

/// Time-domain energy computed from a half spectrum via Parseval.
double parseval_energy(const HalfSpectrum& spec);

} // namespace modfx
