#include "modfx/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "modfx/error.hpp"

namespace modfx {

std::string to_string(KernelKind kind)
{
  switch (kind) {
  case KernelKind::Tri:
    return "tri";
  case KernelKind::LinChirp:
    return "lin-chirp";
  case KernelKind::ApChirp:
    return "ap-chirp";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name)
{
  if (name == "tri") {
    return KernelKind::Tri;
  }
  if (name == "lin-chirp") {
    return KernelKind::LinChirp;
  }
  if (name == "ap-chirp") {
    return KernelKind::ApChirp;
  }
  throw InvalidArgument("unknown kernel kind '" + name + "' (expected tri, lin-chirp, ap-chirp)");
}

int default_ap_chirp_sections(std::size_t kernel_length, double pole)
{
  const double k = 0.5 * static_cast<double>(kernel_length) * (1.0 - pole) / (1.0 + pole);
  return std::max(1, static_cast<int>(std::floor(k)));
}

Kernel gen_triangular(std::size_t kernel_length)
{
  if (kernel_length == 0) {
    throw InvalidArgument("gen_triangular: N' must be >= 1");
  }
  if (kernel_length == 2) {
    throw InvalidArgument("gen_triangular: N' = 2 gives an all-zero triangle");
  }
  Kernel k{KernelKind::Tri, std::vector<double>(kernel_length)};
  const double span = static_cast<double>(std::max<std::size_t>(kernel_length - 1, 1));
  const double centre = static_cast<double>(kernel_length - 1);
  for (std::size_t n = 0; n < kernel_length; ++n) {
    k.samples[n] = 1.0 - std::abs(2.0 * static_cast<double>(n) - centre) / span;
  }
  return k;
}

HalfSpectrum lin_chirp_spectrum(std::size_t kernel_length, std::size_t dft_length)
{
  if (kernel_length == 0 || kernel_length > dft_length) {
    throw InvalidArgument("gen_lin_chirp: need 1 <= N' <= N");
  }
  HalfSpectrum spec(dft_length);
  const double half = static_cast<double>(dft_length / 2);
  const double n = static_cast<double>(dft_length);
  double phase = 0.0;
  spec[0] = {1.0, 0.0};
  for (std::size_t k = 1; k < spec.size(); ++k) {
    const double tau = static_cast<double>(kernel_length - 1) * static_cast<double>(k) / half;
    phase -= 2.0 * std::numbers::pi * tau / n;
    spec[k] = std::polar(1.0, phase);
  }
  const double snapped = std::numbers::pi * std::round(phase / std::numbers::pi);
  spec.bins.back() = {std::cos(snapped), 0.0};
  return spec;
}

Kernel gen_lin_chirp(std::size_t kernel_length, std::size_t dft_length)
{
  const auto full = irfft(lin_chirp_spectrum(kernel_length, dft_length));
  return {KernelKind::LinChirp,
          std::vector<double>(full.begin(), full.begin() + static_cast<long>(kernel_length))};
}

Kernel gen_ap_chirp(int sections, double pole, std::size_t kernel_length)
{
  if (!(std::abs(pole) < 1.0)) {
    throw InstabilityError("gen_ap_chirp: |pole| must be < 1");
  }
  if (sections < 1 || kernel_length == 0) {
    throw InvalidArgument("gen_ap_chirp: need sections >= 1 and N' >= 1");
  }
  std::vector<double> h(kernel_length, 0.0);
  h[0] = 1.0;
  // Transposed direct form: y = p u + s, s <- p y - u.
  for (int sec = 0; sec < sections; ++sec) {
    double state = 0.0;
    for (double& v : h) {
      const double u = v;
      const double y = pole * u + state;
      state = pole * y - u;
      v = y;
    }
  }
  return {KernelKind::ApChirp, std::move(h)};
}

Kernel make_kernel(KernelKind kind, std::size_t kernel_length, std::size_t frame_length)
{
  switch (kind) {
  case KernelKind::Tri:
    return gen_triangular(kernel_length);
  case KernelKind::LinChirp:
    return gen_lin_chirp(kernel_length, frame_length);
  case KernelKind::ApChirp:
    return gen_ap_chirp(default_ap_chirp_sections(kernel_length), kApChirpPole, kernel_length);
  }
  throw InvalidArgument("make_kernel: unknown kind");
}

FramedInput build_training_input(const Kernel& kernel, std::size_t frame_length,
                                 std::size_t frame_count)
{
  if (kernel.length() == 0 || kernel.length() > frame_length) {
    throw InvalidArgument("build_training_input: kernel length " + std::to_string(kernel.length())
                          + " exceeds frame length " + std::to_string(frame_length));
  }
  if (frame_count == 0) {
    throw InvalidArgument("build_training_input: frame count must be positive");
  }
  FramedInput in;
  in.frame_length = frame_length;
  in.kernel_length = kernel.length();
  in.frame_count = frame_count;
  in.frames = FrameMatrix(frame_count, frame_length);
  for (std::size_t m = 0; m < frame_count; ++m) {
    std::copy(kernel.samples.begin(), kernel.samples.end(), in.frames.row(m).begin());
  }
  return in;
}

FrameMatrix frame_signal(std::span<const double> x, std::size_t frame_length)
{
  if (frame_length == 0) {
    throw InvalidArgument("frame_signal: frame length must be positive");
  }
  const std::size_t m = (x.size() + frame_length - 1) / frame_length;
  FrameMatrix frames(m, frame_length);
  std::copy(x.begin(), x.end(), frames.data.begin());
  return frames;
}

std::vector<HalfSpectrum> frame_spectra(const FrameMatrix& frames)
{
  std::vector<HalfSpectrum> out;
  out.reserve(frames.rows);
  for (std::size_t m = 0; m < frames.rows; ++m) {
    out.push_back(rfft(frames.row(m)));
  }
  return out;
}

} // namespace modfx
