#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "modfx/spectral.hpp"

namespace modfx {

enum class KernelKind { Tri, LinChirp, ApChirp };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

struct Kernel {
  KernelKind kind = KernelKind::Tri;
  std::vector<double> samples;

  std::size_t length() const { return samples.size(); }
};

/// Row-major M x N matrix of real frames.
struct FrameMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FrameMatrix() = default;
  FrameMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t m) { return {data.data() + m * cols, cols}; }
  std::span<const double> row(std::size_t m) const { return {data.data() + m * cols, cols}; }

  bool operator==(const FrameMatrix&) const = default;
};

/// M identical frames holding a kernel followed by N - N' zeros.
struct FramedInput {
  FrameMatrix frames;
  std::size_t frame_length = 0;  // N
  std::size_t kernel_length = 0; // N'
  std::size_t frame_count = 0;   // M

  /// Concatenated frames, L = M * N samples.
  std::vector<double> flatten() const { return frames.data; }
};

// Default AP-chirp pole. The section count is derived from N' so the
// DC group delay K (1 + p) / (1 - p) stays near N'/2 and the response decays
// inside the kernel.
inline constexpr double kApChirpPole = 0.9;
int default_ap_chirp_sections(std::size_t kernel_length, double pole = kApChirpPole);

/// Symmetric triangle, samples[n] = 1 - |2n - (N'-1)| / max(N'-1, 1).
/// N' = 2 is rejected because the formula yields an all-zero kernel.
Kernel gen_triangular(std::size_t kernel_length);

/// Unit-modulus spectrum whose group delay rises linearly from 0 at DC to
/// N'-1 samples at Nyquist. The Nyquist phase is snapped to the nearest
/// multiple of pi so the spectrum is exactly realisable by a real sequence.
HalfSpectrum lin_chirp_spectrum(std::size_t kernel_length, std::size_t dft_length);

/// Time-domain Lin chirp: inverse of lin_chirp_spectrum truncated to N'.
Kernel gen_lin_chirp(std::size_t kernel_length, std::size_t dft_length);

/// Impulse response of `sections` cascaded first-order all-passes with a
/// shared real pole, truncated to N'.
Kernel gen_ap_chirp(int sections, double pole, std::size_t kernel_length);

/// Builds a kernel of the given kind with the default construction for a
/// frame length N.
Kernel make_kernel(KernelKind kind, std::size_t kernel_length, std::size_t frame_length);

FramedInput build_training_input(const Kernel& kernel, std::size_t frame_length,
                                 std::size_t frame_count);

/// Splits x into non-overlapping frames of length N; the last frame is
/// zero-padded when length(x) is not a multiple of N.
FrameMatrix frame_signal(std::span<const double> x, std::size_t frame_length);

/// Spectrum of every frame.
std::vector<HalfSpectrum> frame_spectra(const FrameMatrix& frames);

} // namespace modfx
