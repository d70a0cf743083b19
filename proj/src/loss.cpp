#include "modfx/loss.hpp"

#include <complex>

#include "modfx/error.hpp"

namespace modfx {

std::vector<double> loss_weights(std::size_t dft_length, const std::optional<HalfSpectrum>& emphasis)
{
  auto w = parseval_weights(dft_length);
  if (emphasis) {
    if (emphasis->size() != w.size()) {
      throw InvalidArgument("loss_weights: emphasis filter has wrong bin count");
    }
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] *= std::norm((*emphasis)[k]);
    }
  }
  return w;
}

double loss_denominator(std::span<const HalfSpectrum> targets, std::span<const double> weights)
{
  double den = 0.0;
  for (const auto& y : targets) {
    for (std::size_t k = 0; k < y.size(); ++k) {
      den += weights[k] * std::norm(y[k]);
    }
  }
  if (!(den > 0.0)) {
    throw DegenerateError("spectral loss: target has zero (weighted) energy");
  }
  return den;
}

} // namespace modfx
