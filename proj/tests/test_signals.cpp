#include <catch_amalgamated.hpp>

#include <cmath>

#include "modfx/error.hpp"
#include "modfx/signals.hpp"
#include "oracles.hpp"

using namespace modfx;
using Catch::Approx;

TEST_CASE("triangle kernel shape")
{
  CHECK(gen_triangular(1).samples == std::vector<double>{1.0});
  CHECK(gen_triangular(3).samples == std::vector<double>{0.0, 1.0, 0.0});
  CHECK_THROWS_AS(gen_triangular(0), InvalidArgument);
  CHECK_THROWS_AS(gen_triangular(2), InvalidArgument);

  for (std::size_t n : {4u, 5u, 64u, 127u, 128u}) {
    const auto k = gen_triangular(n);
    REQUIRE(k.length() == n);
    CHECK(k.kind == KernelKind::Tri);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(k.samples[i] == k.samples[n - 1 - i]);
      peak = std::max(peak, k.samples[i]);
    }
    CHECK(peak <= 1.0);
    CHECK(k.samples.front() == 0.0);
  }
  CHECK(gen_triangular(5).samples[2] == 1.0);
}

TEST_CASE("triangle spectrum concentrates at low bins")
{
  const auto k = gen_triangular(128);
  const auto x = oracle::dft_half(k.samples, 256);
  const auto spec = rfft(k.samples, 256);
  double sum = 0.0;
  for (double v : k.samples) {
    sum += v;
  }
  CHECK(std::abs(spec[0]) == Approx(sum).epsilon(1e-12));
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(spec[i] - x[i]) < 1e-9);
  }
  // Main lobe ends near bin 2 N / N' = 4; later bins hold little energy.
  double low = 0.0;
  double high = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    (i < 4 ? low : high) += std::norm(x[i]);
  }
  CHECK(high < 0.01 * low);
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(std::abs(x[i]) < std::abs(x[i - 1]));
  }
}

TEST_CASE("tri DC bin equals sample sum for every kernel length")
{
  for (std::size_t n : {1u, 3u, 17u, 256u, 512u}) {
    const auto k = gen_triangular(n);
    double sum = 0.0;
    for (double v : k.samples) {
      sum += v;
    }
    CHECK(std::abs(std::abs(rfft(k.samples, 1024)[0]) - sum) < 1e-9);
  }
}

TEST_CASE("lin chirp construction")
{
  SECTION("unit modulus before truncation")
  {
    for (std::size_t np : {1u, 16u, 128u, 256u}) {
      const auto s = lin_chirp_spectrum(np, 256);
      for (std::size_t k = 0; k < s.size(); ++k) {
        CHECK(std::abs(std::abs(s[k]) - 1.0) < 1e-9);
      }
    }
  }
  SECTION("N' = 1 is impulse-like")
  {
    const auto k = gen_lin_chirp(1, 256);
    REQUIRE(k.length() == 1);
    const auto s = rfft(k.samples, 256);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(std::abs(std::abs(s[i]) - 1.0) < 1e-6);
    }
  }
  SECTION("group delay rises linearly")
  {
    const auto s = lin_chirp_spectrum(128, 256);
    const double dw = 2.0 * oracle::kPi / 256.0;
    const double dphi = std::arg(s[64] / s[63]);
    CHECK(-dphi / dw == Approx(63.5).margin(1.0));
    CHECK(-std::arg(s[10] / s[9]) / dw == Approx(127.0 * 10.0 / 128.0).margin(1e-9));
  }
  SECTION("time-domain kernel is the truncated inverse")
  {
    const auto s = lin_chirp_spectrum(64, 256);
    std::vector<oracle::cd> half(s.bins.begin(), s.bins.end());
    const auto full = oracle::idft_half(half, 256);
    const auto k = gen_lin_chirp(64, 256);
    REQUIRE(k.length() == 64);
    for (std::size_t i = 0; i < 64; ++i) {
      CHECK(k.samples[i] == Approx(full[i]).margin(1e-10));
    }
  }
  CHECK_THROWS_AS(gen_lin_chirp(257, 256), InvalidArgument);
}

TEST_CASE("all-pass chirp matches long division")
{
  CHECK(gen_ap_chirp(1, 0.0, 2).samples == std::vector<double>{0.0, -1.0});
  const auto k = gen_ap_chirp(1, 0.5, 3);
  CHECK(k.samples[0] == Approx(0.5));
  CHECK(k.samples[1] == Approx(-0.75));
  CHECK(k.samples[2] == Approx(-0.375));

  // K sections: (p - z^-1)^K / (1 - p z^-1)^K.
  const double p = 0.7;
  const int sections = 3;
  std::vector<double> num{1.0};
  std::vector<double> den{1.0};
  for (int s = 0; s < sections; ++s) {
    std::vector<double> n2(num.size() + 1, 0.0);
    std::vector<double> d2(den.size() + 1, 0.0);
    for (std::size_t i = 0; i < num.size(); ++i) {
      n2[i] += p * num[i];
      n2[i + 1] -= num[i];
      d2[i] += den[i];
      d2[i + 1] -= p * den[i];
    }
    num = n2;
    den = d2;
  }
  const auto ref = oracle::long_divide(num, den, 40);
  const auto got = gen_ap_chirp(sections, p, 40);
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(got.samples[i] == Approx(ref[i]).margin(1e-12));
  }

  CHECK_THROWS_AS(gen_ap_chirp(1, 1.0, 4), InstabilityError);
  CHECK_THROWS_AS(gen_ap_chirp(1, -1.2, 4), InstabilityError);
}

TEST_CASE("all-pass chirp is flat when the kernel holds its energy")
{
  // 50 sections at p = 0.9 have DC group delay 950 samples, so N' = N = 2048
  // captures the response (at N = 1024 it is still ringing at the frame end).
  const std::size_t n = 2048;
  const auto k = gen_ap_chirp(50, 0.9, n);
  double energy = 0.0;
  for (double v : k.samples) {
    energy += v * v;
  }
  REQUIRE(energy > 0.999);
  const auto s = rfft(k.samples);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(std::abs(std::abs(s[i]) - 1.0) < 1e-3);
  }
}

TEST_CASE("default all-pass chirp fits inside N'")
{
  const std::size_t np = 512;
  const int sections = default_ap_chirp_sections(np);
  CHECK(sections >= 1);
  const auto k = make_kernel(KernelKind::ApChirp, np, 1024);
  REQUIRE(k.length() == np);
  double energy = 0.0;
  for (double v : k.samples) {
    energy += v * v;
  }
  CHECK(energy > 0.999);
}

TEST_CASE("build training input")
{
  const auto in = build_training_input(Kernel{KernelKind::Tri, {1.0}}, 4, 2);
  CHECK(in.frames.rows == 2);
  CHECK(in.flatten() == std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0});

  const auto big = build_training_input(gen_triangular(512), 1024, 256);
  CHECK(big.flatten().size() == (std::size_t{1} << 18));
  for (std::size_t m = 0; m < big.frame_count; ++m) {
    const auto row = big.frames.row(m);
    CHECK(std::equal(row.begin(), row.end(), big.frames.row(0).begin()));
    CHECK(std::all_of(row.begin() + 512, row.end(), [](double v) { return v == 0.0; }));
  }
  CHECK_THROWS_AS(build_training_input(gen_triangular(3), 2, 1), InvalidArgument);

  // Reframing the flattened signal reproduces the matrix.
  CHECK(frame_signal(big.flatten(), 1024) == big.frames);
}

TEST_CASE("frame signal")
{
  const std::vector<double> x{1, 2, 3, 4};
  const auto f = frame_signal(x, 2);
  CHECK(f.rows == 2);
  CHECK(f.data == x);

  const std::vector<double> y{1, 2, 3, 4, 5};
  CHECK(frame_signal(y, 2).data == std::vector<double>{1, 2, 3, 4, 5, 0});

  CHECK(frame_signal(std::vector<double>(std::size_t{1} << 18, 0.0), 4096).rows == 64);
}

TEST_CASE("kernel kind names round-trip")
{
  for (auto k : {KernelKind::Tri, KernelKind::LinChirp, KernelKind::ApChirp}) {
    CHECK(kernel_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(kernel_kind_from_string("square"), InvalidArgument);
}
