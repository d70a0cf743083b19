#include "modfx/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "modfx/error.hpp"

namespace modfx {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
// Plans are created once per length under a lock and reused.
struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

class PlanCache {
public:
  ~PlanCache()
  {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.inverse);
    }
  }

  PlanPair get(std::size_t n)
  {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) {
      return it->second;
    }
    const int len = static_cast<int>(n);
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    PlanPair p;
    p.forward = fftw_plan_dft_r2c_1d(len, in, out, FFTW_ESTIMATE);
    p.inverse = fftw_plan_dft_c2r_1d(len, out, in, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(n, p);
    return p;
  }

private:
  std::mutex mutex_;
  std::map<std::size_t, PlanPair> plans_;
};

PlanCache& plan_cache()
{
  static PlanCache cache;
  return cache;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

void require_even(std::size_t n, const char* what)
{
  if (n == 0 || n % 2 != 0) {
    throw InvalidArgument(std::string(what) + ": DFT length must be even and positive, got "
                          + std::to_string(n));
  }
}

} // namespace

HalfSpectrum::HalfSpectrum(std::size_t dft_length, complex fill)
    : n(dft_length), bins(dft_length / 2 + 1, fill)
{
}

FreqGrid::FreqGrid(std::size_t dft_length) : n(dft_length)
{
  require_even(dft_length, "FreqGrid");
  const std::size_t bins = n / 2 + 1;
  z.resize(bins);
  zinv.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    z[k] = {std::cos(w), std::sin(w)};
    zinv[k] = {std::cos(w), -std::sin(w)};
  }
  // Exact endpoints.
  z.front() = zinv.front() = {1.0, 0.0};
  z.back() = zinv.back() = {-1.0, 0.0};
}

HalfSpectrum rfft(std::span<const double> frame) { return rfft(frame, frame.size()); }

HalfSpectrum rfft(std::span<const double> frame, std::size_t dft_length)
{
  require_even(dft_length, "rfft");
  if (frame.size() > dft_length) {
    throw InvalidArgument("rfft: frame longer than DFT length");
  }
  const PlanPair plan = plan_cache().get(dft_length);
  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(dft_length));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(dft_length / 2 + 1));
  std::fill(in.get(), in.get() + dft_length, 0.0);
  std::copy(frame.begin(), frame.end(), in.get());
  fftw_execute_dft_r2c(plan.forward, in.get(), out.get());

  HalfSpectrum spec(dft_length);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    spec[k] = {out.get()[k][0], out.get()[k][1]};
  }
  return spec;
}

std::vector<double> irfft(const HalfSpectrum& spec)
{
  const std::size_t n = spec.n;
  require_even(n, "irfft");
  if (spec.size() != n / 2 + 1) {
    throw InvalidArgument("irfft: bin count does not match N/2+1");
  }
  const PlanPair plan = plan_cache().get(n);
  std::unique_ptr<fftw_complex, FftwDeleter> in(fftw_alloc_complex(n / 2 + 1));
  std::unique_ptr<double, FftwDeleter> out(fftw_alloc_real(n));
  for (std::size_t k = 0; k < spec.size(); ++k) {
    in.get()[k][0] = spec[k].real();
    in.get()[k][1] = spec[k].imag();
  }
  in.get()[0][1] = 0.0;
  in.get()[n / 2][1] = 0.0;
  fftw_execute_dft_c2r(plan.inverse, in.get(), out.get());

  std::vector<double> x(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = out.get()[i] * scale;
  }
  return x;
}

HalfSpectrum delay_response(double delay, const FreqGrid& grid)
{
  HalfSpectrum h(grid.n);
  const double w0 = -2.0 * std::numbers::pi * delay / static_cast<double>(grid.n);
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double ph = w0 * static_cast<double>(k);
    h[k] = {std::cos(ph), std::sin(ph)};
  }
  return h;
}

HalfSpectrum apf_cascade_response(double pole, int sections, const FreqGrid& grid)
{
  if (!(std::abs(pole) < 1.0)) {
    throw InstabilityError("apf_cascade_response: |pole| must be < 1, got " + std::to_string(pole));
  }
  if (sections < 1) {
    throw InvalidArgument("apf_cascade_response: need at least one section");
  }
  HalfSpectrum h(grid.n);
  for (std::size_t k = 0; k < h.size(); ++k) {
    const complex zi = grid.zinv[k];
    const complex a = (pole - zi) / (1.0 - pole * zi);
    h[k] = to_std(ipow(Cplx<double>(a), sections));
  }
  return h;
}

HalfSpectrum svf_response(const SVFParams& params, const FreqGrid& grid)
{
  const BiquadCoeffs<double> c = svf_coefficients(params);
  HalfSpectrum h(grid.n);
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (biquad_den_abs2(c, grid.zinv[k]) < 1e-24) {
      throw NumericError("svf_response: singular filter at bin " + std::to_string(k));
    }
    h[k] = to_std(biquad_eval(c, grid.zinv[k]));
  }
  return h;
}

HalfSpectrum multiply(const HalfSpectrum& a, const HalfSpectrum& b)
{
  if (a.n != b.n || a.size() != b.size()) {
    throw InvalidArgument("multiply: spectra differ in length");
  }
  HalfSpectrum out(a.n);
  for (std::size_t k = 0; k < a.size(); ++k) {
    out[k] = a[k] * b[k];
  }
  return out;
}

std::vector<double> parseval_weights(std::size_t dft_length)
{
  require_even(dft_length, "parseval_weights");
  std::vector<double> w(dft_length / 2 + 1, 2.0);
  w.front() = 1.0;
  w.back() = 1.0;
  return w;
}

double parseval_energy(const HalfSpectrum& spec)
{
  const auto w = parseval_weights(spec.n);
  double e = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    e += w[k] * std::norm(spec[k]);
  }
  return e / static_cast<double>(spec.n);
}

} // namespace modfx
