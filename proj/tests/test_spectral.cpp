#include <catch_amalgamated.hpp>

#include <cmath>

#include "modfx/error.hpp"
#include "modfx/signals.hpp"
#include "modfx/spectral.hpp"
#include "oracles.hpp"

using namespace modfx;
using Catch::Approx;

TEST_CASE("frequency grid endpoints")
{
  const FreqGrid g(16);
  REQUIRE(g.size() == 9);
  CHECK(g.z[0] == complex(1.0, 0.0));
  CHECK(g.z[8] == complex(-1.0, 0.0));
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(std::abs(std::abs(g.z[k]) - 1.0) < 1e-15);
    CHECK(std::abs(g.z[k] * g.zinv[k] - 1.0) < 1e-15);
  }
  CHECK_THROWS_AS(FreqGrid(7), InvalidArgument);
}

TEST_CASE("rfft basic cases")
{
  const auto imp = rfft(std::vector<double>{1, 0, 0, 0});
  for (std::size_t k = 0; k < imp.size(); ++k) {
    CHECK(imp[k] == complex(1.0, 0.0));
  }
  const auto dc = rfft(std::vector<double>{1, 1, 1, 1});
  REQUIRE(dc.size() == 3);
  CHECK(std::abs(dc[0] - 4.0) < 1e-15);
  CHECK(std::abs(dc[1]) < 1e-15);
  CHECK(std::abs(dc[2]) < 1e-15);
  CHECK_THROWS_AS(rfft(std::vector<double>{1, 2, 3}), InvalidArgument);
}

TEST_CASE("rfft matches naive DFT")
{
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = oracle::noise(16, seed);
    const auto ref = oracle::dft_half(x, 16);
    const auto got = rfft(x);
    for (std::size_t k = 0; k < ref.size(); ++k) {
      CHECK(std::abs(got[k] - ref[k]) < 1e-10);
    }
  }
  const auto x = oracle::noise(10, 9);
  const auto ref = oracle::dft_half(x, 32);
  const auto got = rfft(x, 32);
  for (std::size_t k = 0; k < ref.size(); ++k) {
    CHECK(std::abs(got[k] - ref[k]) < 1e-10);
  }
}

TEST_CASE("irfft")
{
  HalfSpectrum s(4);
  s[0] = 4.0;
  const auto x = irfft(s);
  for (double v : x) {
    CHECK(v == Approx(1.0));
  }

  const auto y = oracle::noise(64, 3);
  const auto back = irfft(rfft(y));
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(std::abs(back[i] - y[i]) < 1e-10);
  }

  // Arbitrary Hermitian half spectrum against a naive inverse; the DC and
  // Nyquist imaginary parts are ignored by both.
  HalfSpectrum h(32);
  const auto re = oracle::noise(17, 5);
  const auto im = oracle::noise(17, 6);
  std::vector<oracle::cd> half(17);
  for (std::size_t k = 0; k < 17; ++k) {
    h[k] = {re[k], im[k]};
    half[k] = {re[k], im[k]};
  }
  const auto a = irfft(h);
  const auto b = oracle::idft_half(half, 32);
  for (std::size_t i = 0; i < 32; ++i) {
    CHECK(std::abs(a[i] - b[i]) < 1e-10);
  }
  const auto h2 = rfft(a);
  for (std::size_t k = 1; k < 16; ++k) {
    CHECK(std::abs(h2[k] - h[k]) < 1e-10);
  }
  CHECK(std::abs(h2[0].imag()) < 1e-12);
}

TEST_CASE("delay response")
{
  const FreqGrid g(512);
  const auto d0 = delay_response(0.0, g);
  for (std::size_t k = 0; k < d0.size(); ++k) {
    CHECK(d0[k] == complex(1.0, 0.0));
  }
  const auto half = delay_response(256.0, g);
  CHECK(std::abs(half[1] - complex(-1.0, 0.0)) < 1e-12);

  // Integer delay is a shift for signals supported on the first N - D samples.
  std::vector<double> x(512, 0.0);
  const auto noise = oracle::noise(412, 11);
  std::copy(noise.begin(), noise.end(), x.begin());
  const auto y = irfft(multiply(rfft(x), delay_response(100.0, g)));
  for (std::size_t n = 0; n < 512; ++n) {
    const double ref = n < 100 ? 0.0 : x[n - 100];
    CHECK(std::abs(y[n] - ref) < 1e-10);
  }

  const auto a = delay_response(13.25, g);
  const auto b = delay_response(-4.5, g);
  const auto c = delay_response(8.75, g);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(std::abs(std::abs(a[k]) - 1.0) < 1e-12);
    CHECK(std::abs(a[k] * b[k] - c[k]) < 1e-12);
  }
}

TEST_CASE("all-pass cascade response")
{
  const FreqGrid g(256);
  for (double p : {-0.9, -0.3, 0.0, 0.5, 0.95}) {
    for (int k : {1, 2, 3, 6}) {
      const auto h = apf_cascade_response(p, k, g);
      CHECK(std::abs(h[0] - std::pow(-1.0, k)) < 1e-12);
      CHECK(std::abs(h[128] - 1.0) < 1e-12);
      for (std::size_t i = 0; i < h.size(); ++i) {
        CHECK(std::abs(std::abs(h[i]) - 1.0) < 1e-12);
      }
    }
  }

  // Time-domain oracle: 4 direct-form sections, decayed inside N samples.
  std::vector<double> x(256, 0.0);
  x[0] = 1.0;
  for (int s = 0; s < 4; ++s) {
    x = oracle::allpass_df1(x, 0.5);
  }
  REQUIRE(std::abs(x.back()) < 1e-8);
  const auto ref = oracle::dft_half(x, 256);
  const auto h = apf_cascade_response(0.5, 4, g);
  for (std::size_t k = 0; k < h.size(); ++k) {
    CHECK(std::abs(h[k] - ref[k]) < 1e-6);
  }

  CHECK_THROWS_AS(apf_cascade_response(1.0, 1, g), InstabilityError);
  CHECK_THROWS_AS(apf_cascade_response(-1.5, 1, g), InstabilityError);
}

TEST_CASE("svf response")
{
  const FreqGrid g(128);
  SVFParams p{0.3, -0.4, 0.7, 1.3, 0.9};
  const auto h = svf_response(p, g);
  CHECK(std::abs(h[0] - p.m_low) < 1e-12);
  CHECK(std::abs(h[64] - p.m_high) < 1e-12);

  // Brute-force polynomial evaluation of the coefficients.
  const double f = 1.0 / (2.0 * (1.0 + std::exp(-p.f_raw)));
  const double r = std::log1p(std::exp(p.r_raw));
  const double gg = std::tan(oracle::kPi * f);
  const double b[3] = {gg * gg * p.m_low + gg * p.m_band + p.m_high,
                       2 * gg * gg * p.m_low - 2 * p.m_high,
                       gg * gg * p.m_low - gg * p.m_band + p.m_high};
  const double a[3] = {gg * gg + 2 * r + 1, 2 * gg * gg - 2, gg * gg - 2 * r + 1};
  for (std::size_t k = 0; k < h.size(); ++k) {
    const complex zi = std::polar(1.0, -2.0 * oracle::kPi * static_cast<double>(k) / 128.0);
    const complex ref = (b[0] + b[1] * zi + b[2] * zi * zi) / (a[0] + a[1] * zi + a[2] * zi * zi);
    CHECK(std::abs(h[k] - ref) < 1e-12);
  }

  // Impulse response of the biquad recursion has the same spectrum.
  std::vector<double> imp(128, 0.0);
  imp[0] = 1.0;
  const auto ir = oracle::biquad_df1(imp, b, a);
  REQUIRE(std::abs(ir.back()) < 1e-10);
  const auto spec = oracle::dft_half(ir, 128);
  for (std::size_t k = 0; k < h.size(); ++k) {
    CHECK(std::abs(h[k] - spec[k]) < 1e-8);
  }

  CHECK(svf_frequency(0.0) == 0.25);
  CHECK(std::tan(oracle::kPi * svf_frequency(0.0)) == Approx(1.0));
}

TEST_CASE("parseval")
{
  for (std::size_t n : {8u, 64u, 1024u}) {
    const auto x = oracle::noise(n, n);
    double e = 0.0;
    for (double v : x) {
      e += v * v;
    }
    CHECK(parseval_energy(rfft(x)) == Approx(e).epsilon(1e-12));
    const auto w = parseval_weights(n);
    REQUIRE(w.size() == n / 2 + 1);
    CHECK(w.front() == 1.0);
    CHECK(w.back() == 1.0);
    CHECK(w[1] == 2.0);
  }
}

TEST_CASE("multiply rejects mismatched spectra")
{
  CHECK_THROWS_AS(multiply(HalfSpectrum(8), HalfSpectrum(16)), InvalidArgument);
}
