#pragma once

// State-variable-filter parameterisation of a biquad.
//
// Unconstrained (f_raw, r_raw) map to a normalised frequency f in (0, 0.5) and
// resonance R > 0:
//   f = 1 / (2 (1 + exp(-f_raw)))     R = log(1 + exp(r_raw))
// and with g = tan(pi f) the transfer function is
//   (b0 + b1 z^-1 + b2 z^-2) / (a0 + a1 z^-1 + a2 z^-2)
//   b0 = g^2 mL + g mB + mH      a0 = g^2 + 2R + 1
//   b1 = 2 g^2 mL - 2 mH         a1 = 2 g^2 - 2
//   b2 = g^2 mL - g mB + mH      a2 = g^2 - 2R + 1

#include <cmath>
#include <complex>
#include <numbers>

#include "modfx/autodiff.hpp"
#include "modfx/cplx.hpp"

namespace modfx {

template <class T>
struct BasicSVFParams {
  T f_raw{};
  T r_raw{};
  T m_low{};
  T m_band{};
  T m_high{};
};

using SVFParams = BasicSVFParams<double>;

template <class T>
struct BiquadCoeffs {
  T b0, b1, b2;
  T a0, a1, a2;
};

/// f = sigmoid(f_raw) / 2 inside (0, 0.5). The raw value is held within
/// +-12: closer to 0 or 0.5 the g^2 terms of the biquad coefficients vanish
/// in double precision and a pole lands on the unit circle.
template <class T>
T svf_frequency(const T& f_raw)
{
  using ad::sigmoid;
  constexpr double kEdge = 12.0;
  const double v = ad::value_of(f_raw);
  if (v > kEdge || v < -kEdge) {
    return T(0.5) * sigmoid(T(v > 0.0 ? kEdge : -kEdge));
  }
  return T(0.5) * sigmoid(f_raw);
}

/// R = softplus(r_raw) = log(1 + e^r_raw), evaluated without overflow; above
/// 30 it equals r_raw to within 1e-13. The raw value is held at -12 or more:
/// below that the 2 R g terms vanish against 1 and the poles reach the unit
/// circle in double precision.
template <class T>
T svf_resonance(const T& r_raw)
{
  using std::exp;
  using std::log1p;
  using ad::exp;
  using ad::log1p;
  const double v = ad::value_of(r_raw);
  if (v > 30.0) {
    return r_raw;
  }
  if (v < -12.0) {
    return T(std::log1p(std::exp(-12.0)));
  }
  return log1p(exp(r_raw));
}

template <class T>
BiquadCoeffs<T> svf_coefficients(const BasicSVFParams<T>& p)
{
  using std::tan;
  const T f = svf_frequency(p.f_raw);
  const T r = svf_resonance(p.r_raw);
  const T g = tan(T(std::numbers::pi) * f);
  const T g2 = g * g;
  const T g2l = g2 * p.m_low;
  const T gb = g * p.m_band;
  BiquadCoeffs<T> c;
  c.b0 = g2l + gb + p.m_high;
  c.b1 = T(2.0) * g2l - T(2.0) * p.m_high;
  c.b2 = g2l - gb + p.m_high;
  c.a0 = g2 + T(2.0) * r + T(1.0);
  c.a1 = T(2.0) * g2 - T(2.0);
  c.a2 = g2 - T(2.0) * r + T(1.0);
  return c;
}

// Polynomial ratio evaluated at one point given z^-1.
template <class T>
Cplx<T> biquad_eval(const BiquadCoeffs<T>& c, std::complex<double> zinv)
{
  const std::complex<double> zinv2 = zinv * zinv;
  const Cplx<T> num(c.b0 + c.b1 * T(zinv.real()) + c.b2 * T(zinv2.real()),
                    c.b1 * T(zinv.imag()) + c.b2 * T(zinv2.imag()));
  const Cplx<T> den(c.a0 + c.a1 * T(zinv.real()) + c.a2 * T(zinv2.real()),
                    c.a1 * T(zinv.imag()) + c.a2 * T(zinv2.imag()));
  return num / den;
}

template <class T>
T biquad_den_abs2(const BiquadCoeffs<T>& c, std::complex<double> zinv)
{
  const std::complex<double> zinv2 = zinv * zinv;
  const Cplx<T> den(c.a0 + c.a1 * T(zinv.real()) + c.a2 * T(zinv2.real()),
                    c.a1 * T(zinv.imag()) + c.a2 * T(zinv2.imag()));
  return abs2(den);
}

} // namespace modfx
