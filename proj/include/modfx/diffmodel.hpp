#pragma once

// Differentiable frequency-sampling model.
//
// Each channel produces, for frame m, a frequency response
//   h_m = h_svf1 * (b0 + b1 h_svf2 s_m) / (1 - a1 s_m)          config I
//   h_m = h_svf1 * (b0 + b1 h_svf2 s_m) / (1 - a1 h_svf2 s_m)   config II
// where s_m is either a pure delay z^-d_m or a cascade of K first-order
// all-passes with pole p_m. Both are driven by the control value
// c_m = MLP(LUT[m]). The predicted frame spectrum is X_m times the sum of the
// channel responses.
//
// The model is templated on the scalar type so the same code runs on doubles
// (inference, finite differences) and on ad::Var (training).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "modfx/autodiff.hpp"
#include "modfx/cplx.hpp"
#include "modfx/error.hpp"
#include "modfx/spectral.hpp"
#include "modfx/svf.hpp"

namespace modfx {

enum class Variant { DelayLine, ApfCascade };
enum class FeedbackConfig { I, II };

std::string to_string(Variant v);
std::string to_string(FeedbackConfig f);
Variant variant_from_string(const std::string& s);
FeedbackConfig feedback_from_string(const std::string& s);

inline constexpr std::size_t kMlpWidth = 16;

template <class T>
struct BasicCombParams {
  T b0{};
  T b1{};
  T a1{};
};

template <class T>
struct BasicLfoParams {
  std::vector<T> lut;
  std::array<T, kMlpWidth> w1{};
  std::array<T, kMlpWidth> b1{};
  std::array<T, kMlpWidth> w2{};
  T b2{};
};

template <class T>
struct BasicChannelParams {
  BasicCombParams<T> comb;
  BasicSVFParams<T> svf1;
  BasicSVFParams<T> svf2;
  BasicLfoParams<T> lfo;
  Variant variant = Variant::DelayLine;
  int sections = 1; // K, used by the all-pass variant
  FeedbackConfig feedback = FeedbackConfig::I;
  // Test hooks: treat the filter as an identity response. Never set by
  // training configurations.
  bool bypass_svf1 = false;
  bool bypass_svf2 = false;
};

using CombParams = BasicCombParams<double>;
using LfoParams = BasicLfoParams<double>;
using ChannelParams = BasicChannelParams<double>;

struct ModelParams {
  std::vector<ChannelParams> channels;
  std::size_t frame_length = 1024; // N
  std::size_t frame_count = 256;   // M
  double sample_rate = 44100.0;

  bool operator==(const ModelParams& o) const;
};

/// Shape of a freshly initialised model.
struct ModelShape {
  Variant variant = Variant::DelayLine;
  int sections = 6;
  FeedbackConfig feedback = FeedbackConfig::I;
  std::size_t channels = 1;
  std::size_t frame_length = 1024;
  std::size_t frame_count = 256;
  double sample_rate = 44100.0;
};

// Visits every learnable scalar of a channel in canonical order:
// comb (b0, b1, a1), svf1, svf2 (f_raw, r_raw, m_low, m_band, m_high),
// lfo (lut[0..M), w1, b1, w2, b2). `fn(name, value)`.
template <class Channel, class Fn>
void for_each_param(Channel& ch, Fn&& fn)
{
  fn("comb.b0", ch.comb.b0);
  fn("comb.b1", ch.comb.b1);
  fn("comb.a1", ch.comb.a1);
  auto svf = [&](const char* prefix, auto& s) {
    const std::string p(prefix);
    fn(p + ".f_raw", s.f_raw);
    fn(p + ".r_raw", s.r_raw);
    fn(p + ".m_low", s.m_low);
    fn(p + ".m_band", s.m_band);
    fn(p + ".m_high", s.m_high);
  };
  svf("svf1", ch.svf1);
  svf("svf2", ch.svf2);
  for (std::size_t i = 0; i < ch.lfo.lut.size(); ++i) {
    fn("lfo.lut[" + std::to_string(i) + "]", ch.lfo.lut[i]);
  }
  for (std::size_t i = 0; i < kMlpWidth; ++i) {
    fn("lfo.w1[" + std::to_string(i) + "]", ch.lfo.w1[i]);
  }
  for (std::size_t i = 0; i < kMlpWidth; ++i) {
    fn("lfo.b1[" + std::to_string(i) + "]", ch.lfo.b1[i]);
  }
  for (std::size_t i = 0; i < kMlpWidth; ++i) {
    fn("lfo.w2[" + std::to_string(i) + "]", ch.lfo.w2[i]);
  }
  fn("lfo.b2", ch.lfo.b2);
}

std::size_t param_count(const ModelParams& params);
std::vector<double> flatten(const ModelParams& params);
void unflatten(std::span<const double> values, ModelParams& params);
std::vector<std::string> param_names(const ModelParams& params);

/// Copies the structure of `shape` with scalar values taken from `values`
/// starting at `offset` (advanced past the channel).
template <class T>
BasicChannelParams<T> channel_with_values(const ChannelParams& shape, std::span<const T> values,
                                          std::size_t& offset)
{
  BasicChannelParams<T> ch;
  ch.variant = shape.variant;
  ch.sections = shape.sections;
  ch.feedback = shape.feedback;
  ch.bypass_svf1 = shape.bypass_svf1;
  ch.bypass_svf2 = shape.bypass_svf2;
  ch.lfo.lut.resize(shape.lfo.lut.size());
  for_each_param(ch, [&](const std::string&, T& v) { v = values[offset++]; });
  return ch;
}

// ---------------------------------------------------------------------------
// Control mappings

template <class T>
T lfo_forward(const BasicLfoParams<T>& lfo, std::size_t m)
{
  using std::tanh;
  if (m >= lfo.lut.size()) {
    throw InvalidArgument("lfo_forward: frame index " + std::to_string(m) + " out of range");
  }
  const T& in = lfo.lut[m];
  T out = lfo.b2;
  for (std::size_t i = 0; i < kMlpWidth; ++i) {
    out = out + lfo.w2[i] * tanh(lfo.w1[i] * in + lfo.b1[i]);
  }
  return out;
}

/// d = N/4 (1 - cos(pi c)), always within [0, N/2].
template <class T>
T delay_from_control(const T& c, std::size_t frame_length)
{
  using std::cos;
  return T(static_cast<double>(frame_length) / 4.0) * (T(1.0) - cos(T(std::numbers::pi) * c));
}

/// p = tanh(pi c + 0.5), always inside (-1, 1). Past |arg| = 12 the pole is
/// held at tanh(+-12) = +-(1 - 7.6e-11); beyond that tanh rounds towards +-1
/// and the all-pass sections stop decaying in double precision.
template <class T>
T pole_from_control(const T& c)
{
  using std::tanh;
  constexpr double kEdge = 12.0;
  const T arg = T(std::numbers::pi) * c + T(0.5);
  const double v = ad::value_of(arg);
  if (v > kEdge || v < -kEdge) {
    return T(std::tanh(v > 0.0 ? kEdge : -kEdge));
  }
  return tanh(arg);
}

// ---------------------------------------------------------------------------
// Frequency-domain building blocks

template <class T>
struct ChannelFilters {
  std::vector<Cplx<T>> h1; // empty when bypassed
  std::vector<Cplx<T>> h2;
};

template <class T>
std::vector<Cplx<T>> svf_bins(const BasicSVFParams<T>& p, const FreqGrid& grid)
{
  const BiquadCoeffs<T> c = svf_coefficients(p);
  std::vector<Cplx<T>> h(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (ad::value_of(biquad_den_abs2(c, grid.zinv[k])) < 1e-24) {
      throw NumericError("svf_response: singular filter at bin " + std::to_string(k));
    }
    h[k] = biquad_eval(c, grid.zinv[k]);
  }
  return h;
}

template <class T>
ChannelFilters<T> channel_filters(const BasicChannelParams<T>& ch, const FreqGrid& grid)
{
  ChannelFilters<T> f;
  if (!ch.bypass_svf1) {
    f.h1 = svf_bins(ch.svf1, grid);
  }
  if (!ch.bypass_svf2) {
    f.h2 = svf_bins(ch.svf2, grid);
  }
  return f;
}

// Frame-dependent component s_m at every bin.
template <class T>
void variant_bins(const BasicChannelParams<T>& ch, const T& control, const FreqGrid& grid,
                  std::vector<Cplx<T>>& s)
{
  using std::cos;
  using std::sin;
  s.resize(grid.size());
  if (ch.variant == Variant::DelayLine) {
    const T d = delay_from_control(control, grid.n);
    const double w = -2.0 * std::numbers::pi / static_cast<double>(grid.n);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const T ph = d * T(w * static_cast<double>(k));
      s[k] = Cplx<T>(cos(ph), sin(ph));
    }
  } else {
    const T p = pole_from_control(control);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const complex zi = grid.zinv[k];
      const Cplx<T> num(p - T(zi.real()), T(-zi.imag()));
      const Cplx<T> den(T(1.0) - p * T(zi.real()), -(p * T(zi.imag())));
      s[k] = ipow(num / den, ch.sections);
    }
  }
}

// h_m at every bin, given the precomputed filters and s_m.
template <class T>
void combine_bins(const BasicChannelParams<T>& ch, const ChannelFilters<T>& f,
                  const std::vector<Cplx<T>>& s, std::vector<Cplx<T>>& h)
{
  h.resize(s.size());
  const T one(1.0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Cplx<T> wet = f.h2.empty() ? s[k] : f.h2[k] * s[k];
    const Cplx<T> num = ch.comb.b0 + ch.comb.b1 * wet;
    const Cplx<T>& loop = ch.feedback == FeedbackConfig::I ? s[k] : wet;
    const Cplx<T> den = one - ch.comb.a1 * loop;
    if (ad::value_of(abs2(den)) < 1e-18) {
      throw NumericError("frame_response: near-singular feedback denominator at bin "
                         + std::to_string(k));
    }
    Cplx<T> r = num / den;
    if (!f.h1.empty()) {
      r = f.h1[k] * r;
    }
    h[k] = r;
  }
}

// ---------------------------------------------------------------------------
// Double-precision API

double lfo_forward(const LfoParams& lfo, std::size_t m);

struct VariantResponse {
  HalfSpectrum response;
  double value; // d_m for the delay variant, p_m for the all-pass variant
};

VariantResponse delay_variant_response(double control, const FreqGrid& grid);
VariantResponse phaser_variant_response(double control, int sections, const FreqGrid& grid);

HalfSpectrum frame_response(const ChannelParams& ch, std::size_t m, const FreqGrid& grid);

/// Control series c_m for m = 0..M-1.
std::vector<double> control_series(const LfoParams& lfo);

/// Predicted spectra: sum over channels of X_m * h_m.
std::vector<HalfSpectrum> fs_forward(const ModelParams& params,
                                     std::span<const HalfSpectrum> inputs);

ModelParams init_params(std::uint64_t seed, const ModelShape& shape);

/// LFO whose output reproduces `control` (to ~1e-7) through the MLP: one
/// hidden unit in its linear region, LUT = control.
LfoParams identity_lfo(std::span<const double> control);

} // namespace modfx
