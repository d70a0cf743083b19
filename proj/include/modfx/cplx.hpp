#pragma once

// Minimal complex number over an arbitrary real scalar type. std::complex is
// only specified for float/double/long double, so the differentiable model
// uses this instead for both double and ad::Var.

#include <complex>
#include <utility>

namespace modfx {

template <class T>
struct Cplx {
  T re{};
  T im{};

  Cplx() = default;
  Cplx(T r, T i) : re(std::move(r)), im(std::move(i)) {}
  Cplx(const std::complex<double>& c) : re(c.real()), im(c.imag()) {} // NOLINT
};

template <class T>
Cplx<T> operator+(const Cplx<T>& x, const Cplx<T>& y)
{
  return {x.re + y.re, x.im + y.im};
}
template <class T>
Cplx<T> operator-(const Cplx<T>& x, const Cplx<T>& y)
{
  return {x.re - y.re, x.im - y.im};
}
template <class T>
Cplx<T> operator*(const Cplx<T>& x, const Cplx<T>& y)
{
  return {x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re};
}
template <class T>
Cplx<T> operator/(const Cplx<T>& x, const Cplx<T>& y)
{
  const T den = y.re * y.re + y.im * y.im;
  return {(x.re * y.re + x.im * y.im) / den, (x.im * y.re - x.re * y.im) / den};
}

// Real scalar on either side.
template <class T>
Cplx<T> operator*(const T& s, const Cplx<T>& x)
{
  return {s * x.re, s * x.im};
}
template <class T>
Cplx<T> operator+(const T& s, const Cplx<T>& x)
{
  return {s + x.re, x.im};
}
template <class T>
Cplx<T> operator-(const T& s, const Cplx<T>& x)
{
  return {s - x.re, -x.im};
}

// Constant complex times variable complex: keeps constants off the tape.
template <class T>
Cplx<T> operator*(const std::complex<double>& c, const Cplx<T>& x)
{
  return {c.real() * x.re - c.imag() * x.im, c.real() * x.im + c.imag() * x.re};
}

template <class T>
T abs2(const Cplx<T>& x)
{
  return x.re * x.re + x.im * x.im;
}

template <class T>
Cplx<T> ipow(Cplx<T> x, int n)
{
  Cplx<T> acc(T(1.0), T(0.0));
  bool first = true;
  while (n > 0) {
    if (n & 1) {
      acc = first ? x : acc * x;
      first = false;
    }
    n >>= 1;
    if (n > 0) {
      x = x * x;
    }
  }
  return acc;
}

inline std::complex<double> to_std(const Cplx<double>& x) { return {x.re, x.im}; }

} // namespace modfx
