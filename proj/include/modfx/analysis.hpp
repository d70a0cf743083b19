#pragma once

// Loss surfaces for delay and all-pass pole estimation from frame spectra.
//
// Delay: L(Dhat) = sum_{k=0}^{N/2} |X(k)|^2 (1 - cos(2 pi k (Dhat - D) / N)).
// The derivative carries the chain factor 2 pi k / N on every term.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "modfx/spectral.hpp"

namespace modfx {

struct LossSurface {
  std::string param;          // name of the grid variable
  std::vector<double> grid;   // strictly increasing
  std::vector<double> values; // loss at each grid point
};

/// Row-major (k, Dhat) grid of Gamma values.
struct GammaSurface {
  std::vector<double> k;
  std::vector<double> dhat;
  std::vector<double> gamma; // gamma[i * dhat.size() + j] = Gamma(dhat[j], k[i])

  double at(std::size_t ik, std::size_t jd) const { return gamma[ik * dhat.size() + jd]; }
};

double gamma_value(double dhat, double delay, double k, std::size_t dft_length);

GammaSurface gamma_surface(double delay, std::size_t dft_length, std::span<const double> k_values,
                           std::span<const double> dhat_values);

/// Half spectrum of a length-N' triangle zero-padded to N; N' = 1 is a unit
/// impulse, i.e. a flat spectrum.
HalfSpectrum tri_spectrum(std::size_t kernel_length, std::size_t dft_length);

struct DelayLoss {
  double value = 0.0;
  double gradient = 0.0; // dL/dDhat
};

DelayLoss delay_loss(double dhat, double delay, const HalfSpectrum& x);

LossSurface delay_loss_surface(double delay, const HalfSpectrum& x,
                               std::span<const double> dhat_grid);

/// sum_k |X(k)|^2 |A_p(k)^K - A_phat(k)^K|^2.
double apf_loss(double pole, double phat, int sections, const HalfSpectrum& x);

/// Loss over a grid of candidate poles, reported against 1 - phat in
/// ascending order. Throws InvalidArgument if any |phat| >= 1.
LossSurface apf_loss_surface(double pole, int sections, const HalfSpectrum& x,
                             std::span<const double> phat_grid);

struct DescentResult {
  std::vector<double> trajectory; // Dhat before each step, then the final value
  double final_loss = 0.0;
};

/// Gradient descent on delay_loss. The step is scaled by the inverse
/// curvature at the optimum, sum_k |X|^2 (2 pi k / N)^2, so `learning_rate`
/// is independent of the input level.
DescentResult descend_delay(double d0, double delay, const HalfSpectrum& x, std::size_t steps = 5000,
                            double learning_rate = 1e-2);

/// Largest r such that dL/dDhat has the sign of (Dhat - D) on 0 < |Dhat - D| < r,
/// scanned at `resolution` samples up to `limit`.
double basin_half_width(double delay, const HalfSpectrum& x, double resolution = 1e-3,
                        double limit = 0.0);

/// Half-width of the region around D where L is convex (d2L/dDhat2 > 0).
double convex_half_width(double delay, const HalfSpectrum& x, double resolution = 1e-3);

/// Writes `path` as CSV (param, loss) and `path` with extension .py as a
/// plotting script that reads only the CSV.
void export_surface(const LossSurface& s, const std::filesystem::path& path);

/// Long-format CSV (k, Dhat, gamma) plus plotting script.
void export_gamma(const GammaSurface& s, const std::filesystem::path& path);

LossSurface read_surface(const std::filesystem::path& path);

} // namespace modfx
