#include "modfx/tdengine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "modfx/error.hpp"
#include "modfx/spectral.hpp"

namespace modfx {

namespace {

constexpr double kPi = std::numbers::pi;

// Cubic Lagrange read of x at fractional position pos, nodes clamped to
// [0, n). Used for resampling the control series.
double interp_clamped(std::span<const double> x, double pos)
{
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto j = static_cast<std::ptrdiff_t>(std::floor(pos));
  const auto w = lagrange4(pos - static_cast<double>(j - 1));
  double acc = 0.0;
  for (std::ptrdiff_t i = 0; i < 4; ++i) {
    const std::ptrdiff_t idx = std::clamp<std::ptrdiff_t>(j - 1 + i, 0, n - 1);
    acc += w[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(idx)];
  }
  return acc;
}

double interp_periodic(std::span<const double> x, double pos)
{
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto j = static_cast<std::ptrdiff_t>(std::floor(pos));
  const auto w = lagrange4(pos - static_cast<double>(j - 1));
  double acc = 0.0;
  for (std::ptrdiff_t i = 0; i < 4; ++i) {
    std::ptrdiff_t idx = (j - 1 + i) % n;
    if (idx < 0) {
      idx += n;
    }
    acc += w[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(idx)];
  }
  return acc;
}

// Mean squared mismatch between c(m) and c(m + period) over the overlap.
double period_mismatch(std::span<const double> c, double period)
{
  const double last = static_cast<double>(c.size()) - 1.0 - period;
  if (last < 1.0) {
    return std::numeric_limits<double>::infinity();
  }
  const auto count = static_cast<std::size_t>(std::floor(last)) + 1;
  double acc = 0.0;
  for (std::size_t m = 0; m < count; ++m) {
    const double d = interp_clamped(c, static_cast<double>(m) + period) - c[m];
    acc += d * d;
  }
  return acc / static_cast<double>(count);
}

double refine_period(std::span<const double> c, double period)
{
  const double lo = 0.97 * period;
  const double hi = 1.03 * period;
  if (static_cast<double>(c.size()) < hi + 4.0) {
    return period;
  }
  constexpr int kGrid = 120;
  double best = period;
  double best_err = period_mismatch(c, period);
  for (int i = 0; i <= kGrid; ++i) {
    const double p = lo + (hi - lo) * i / kGrid;
    const double e = period_mismatch(c, p);
    if (e < best_err) {
      best_err = e;
      best = p;
    }
  }
  // Golden-section search inside the winning grid cell.
  const double step = (hi - lo) / kGrid;
  double a = best - step;
  double b = best + step;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - r * (b - a);
  double x2 = a + r * (b - a);
  double f1 = period_mismatch(c, x1);
  double f2 = period_mismatch(c, x2);
  for (int it = 0; it < 40; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = period_mismatch(c, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = period_mismatch(c, x2);
    }
  }
  const double cand = 0.5 * (a + b);
  return period_mismatch(c, cand) <= best_err ? cand : best;
}

// Variance of c explained by the best fit a + b cos(w m) + d sin(w m).
double sinusoid_fit_gain(std::span<const double> c, double w)
{
  // Normal equations for the basis (1, cos, sin), solved by Cramer's rule.
  double g[3][3] = {};
  double r[3] = {};
  for (std::size_t m = 0; m < c.size(); ++m) {
    const double b[3] = {1.0, std::cos(w * static_cast<double>(m)), std::sin(w * static_cast<double>(m))};
    for (int i = 0; i < 3; ++i) {
      r[i] += b[i] * c[m];
      for (int j = 0; j < 3; ++j) {
        g[i][j] += b[i] * b[j];
      }
    }
  }
  auto det = [](const double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
           - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
           + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double d = det(g);
  if (!(std::abs(d) > 1e-12)) {
    return 0.0;
  }
  double gain = 0.0;
  for (int k = 0; k < 3; ++k) {
    double gk[3][3];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        gk[i][j] = j == k ? r[i] : g[i][j];
      }
    }
    gain += det(gk) / d * r[k];
  }
  return gain;
}

// Period of the best-fitting single sinusoid within [0.8, 1.25] of `period`.
// Unlike the spectral peak it is unbiased by the negative-frequency image
// when the series holds only a few periods.
double fit_sinusoid_period(std::span<const double> c, double period)
{
  const double w0 = 2.0 * kPi / period;
  const double lo = 0.8 * w0;
  const double hi = std::min(1.25 * w0, kPi);
  constexpr int kGrid = 200;
  double best = w0;
  double best_gain = sinusoid_fit_gain(c, w0);
  for (int i = 0; i <= kGrid; ++i) {
    const double w = lo + (hi - lo) * i / kGrid;
    const double e = sinusoid_fit_gain(c, w);
    if (e > best_gain) {
      best_gain = e;
      best = w;
    }
  }
  const double step = (hi - lo) / kGrid;
  double a = best - step;
  double b = best + step;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - r * (b - a);
  double x2 = a + r * (b - a);
  double f1 = sinusoid_fit_gain(c, x1);
  double f2 = sinusoid_fit_gain(c, x2);
  for (int it = 0; it < 50; ++it) {
    if (f1 > f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = sinusoid_fit_gain(c, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = sinusoid_fit_gain(c, x2);
    }
  }
  const double cand = 0.5 * (a + b);
  return 2.0 * kPi / (sinusoid_fit_gain(c, cand) >= best_gain ? cand : best);
}

} // namespace

std::array<double, 4> lagrange4(double t)
{
  const double t1 = t - 1.0;
  const double t2 = t - 2.0;
  const double t3 = t - 3.0;
  return {-t1 * t2 * t3 / 6.0, t * t2 * t3 / 2.0, -t * t1 * t3 / 2.0, t * t1 * t2 / 6.0};
}

double estimate_f0(std::span<const double> control, double frame_rate)
{
  const std::size_t m = control.size();
  if (m < 8) {
    throw InvalidArgument("estimate_f0: control series needs at least 8 frames");
  }
  if (!(frame_rate > 0.0)) {
    throw InvalidArgument("estimate_f0: frame rate must be positive");
  }
  double mean = 0.0;
  for (double v : control) {
    mean += v;
  }
  mean /= static_cast<double>(m);
  std::vector<double> padded(8 * m, 0.0);
  double peak_amp = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    padded[i] = control[i] - mean;
    peak_amp = std::max(peak_amp, std::abs(padded[i]));
  }
  if (peak_amp <= 1e-12 * std::max(1.0, std::abs(mean))) {
    throw DataError("estimate_f0: control signal is flat, no periodicity");
  }
  const HalfSpectrum spec = rfft(padded);
  std::vector<double> mag(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) {
    mag[k] = std::abs(spec[k]);
  }
  // At least one full period must fit in the series: k >= 8 in padded bins.
  const std::size_t kmin = 8;
  std::size_t kpk = kmin;
  for (std::size_t k = kmin; k < mag.size(); ++k) {
    if (mag[k] > mag[kpk]) {
      kpk = k;
    }
  }
  std::vector<double> sorted(mag.begin() + kmin, mag.end());
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double floor = sorted[sorted.size() / 2];
  if (mag[kpk] <= 4.0 * floor || mag[kpk] <= 0.0) {
    throw DataError("estimate_f0: no spectral peak above the noise floor");
  }
  double kref = static_cast<double>(kpk);
  if (kpk + 1 < mag.size() && kpk > kmin) {
    const double tiny = 1e-300;
    const double a = std::log(mag[kpk - 1] + tiny);
    const double b = std::log(mag[kpk] + tiny);
    const double c = std::log(mag[kpk + 1] + tiny);
    const double den = a - 2.0 * b + c;
    if (den < 0.0) {
      kref += std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
    }
  }
  // Leakage biases the peak: fit a sinusoid near it, then refine by
  // self-similarity when the series holds more than one period, which also
  // removes the pull of harmonics on the fit.
  const double fitted = fit_sinusoid_period(control, static_cast<double>(padded.size()) / kref);
  return frame_rate / refine_period(control, fitted);
}

LfoWavetable extract_wavetable(std::span<const double> control, double frame_rate,
                               double sample_rate)
{
  if (!(sample_rate > 0.0)) {
    throw InvalidArgument("extract_wavetable: sample rate must be positive");
  }
  // Without a clear periodic component the whole series is one cycle, which
  // reproduces the trained control over the training span.
  double period = static_cast<double>(control.size());
  try {
    period = frame_rate / estimate_f0(control, frame_rate);
  } catch (const DataError&) {
  }
  const double f0 = frame_rate / period;

  const auto len = static_cast<std::size_t>(std::llround(sample_rate / f0));
  if (len == 0) {
    throw DataError("extract_wavetable: fundamental above the audio sample rate");
  }
  LfoWavetable wt;
  wt.f0 = f0;
  wt.frame_rate = frame_rate;
  wt.sample_rate = sample_rate;
  wt.table.resize(len);
  // Interpolation nodes outside the series are taken one period away, so the
  // table closes smoothly on itself.
  const auto m = static_cast<std::ptrdiff_t>(control.size());
  auto node = [&](std::ptrdiff_t j) {
    if (j >= 0 && j < m) {
      return control[static_cast<std::size_t>(j)];
    }
    const double shifted = static_cast<double>(j) + (j < 0 ? period : -period);
    return interp_clamped(control, shifted);
  };
  for (std::size_t i = 0; i < len; ++i) {
    const double pos = period * static_cast<double>(i) / static_cast<double>(len);
    const auto j = static_cast<std::ptrdiff_t>(std::floor(pos));
    const auto w = lagrange4(pos - static_cast<double>(j - 1));
    double acc = 0.0;
    for (std::ptrdiff_t k = 0; k < 4; ++k) {
      acc += w[static_cast<std::size_t>(k)] * node(j - 1 + k);
    }
    wt.table[i] = acc;
  }
  return wt;
}

std::vector<double> render_lfo(const LfoWavetable& wt, double rate_scale, std::size_t length,
                               double start_phase)
{
  if (!(rate_scale > 0.0)) {
    throw InvalidArgument("render_lfo: rate_scale must be positive");
  }
  std::vector<double> out(length);
  if (length == 0) {
    return out;
  }
  if (wt.table.empty() || !(wt.sample_rate > 0.0)) {
    throw InvalidArgument("render_lfo: empty wavetable");
  }
  const double n = static_cast<double>(wt.table.size());
  const double inc = rate_scale * wt.f0 * n / wt.sample_rate;
  for (std::size_t i = 0; i < length; ++i) {
    double phase = std::fmod(start_phase + inc * static_cast<double>(i), n);
    if (phase < 0.0) {
      phase += n;
    }
    out[i] = interp_periodic(wt.table, phase);
  }
  return out;
}

std::vector<double> render_control_linear(std::span<const double> control,
                                          std::size_t frame_length, std::size_t length)
{
  if (control.empty() || frame_length == 0) {
    throw InvalidArgument("render_control_linear: empty control or zero frame length");
  }
  std::vector<double> out(length);
  const double nf = static_cast<double>(frame_length);
  const double last = static_cast<double>(control.size() - 1);
  for (std::size_t i = 0; i < length; ++i) {
    const double pos = std::clamp(static_cast<double>(i) / nf - 0.5, 0.0, last);
    const auto j = static_cast<std::size_t>(pos);
    const double t = pos - static_cast<double>(j);
    out[i] = j + 1 < control.size() ? (1.0 - t) * control[j] + t * control[j + 1] : control[j];
  }
  return out;
}

FractionalDelayLine::FractionalDelayLine(std::size_t max_delay)
    : max_delay_(static_cast<double>(max_delay))
{
  const std::size_t cap = std::bit_ceil(max_delay + 8);
  buf_.assign(cap, 0.0);
  mask_ = cap - 1;
}

double FractionalDelayLine::past(std::size_t j) const
{
  return buf_[(pos_ + buf_.size() - (j - 1)) & mask_];
}

FractionalDelayLine::Tap FractionalDelayLine::tap(double delay) const
{
  const double d = std::clamp(delay, 0.0, max_delay_);
  const auto j0 = static_cast<std::size_t>(std::max(0.0, std::floor(d) - 1.0));
  const auto w = lagrange4(d - static_cast<double>(j0));
  Tap t{0.0, 0.0};
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t j = j0 + i;
    if (j == 0) {
      t.gain += w[i];
    } else {
      t.rest += w[i] * past(j);
    }
  }
  return t;
}

void FractionalDelayLine::push(double x)
{
  pos_ = (pos_ + 1) & mask_;
  buf_[pos_] = x;
}

void FractionalDelayLine::reset()
{
  std::fill(buf_.begin(), buf_.end(), 0.0);
  pos_ = 0;
}

AllpassCascade::Affine AllpassCascade::affine(double pole) const
{
  // Section output y = p u + s, chained.
  Affine a{1.0, 0.0};
  for (double s : state_) {
    a.gain *= pole;
    a.offset = pole * a.offset + s;
  }
  return a;
}

double AllpassCascade::process(double pole, double x)
{
  double v = x;
  for (double& s : state_) {
    const double y = pole * v + s;
    s = pole * y - v;
    v = y;
  }
  return v;
}

void AllpassCascade::reset()
{
  std::fill(state_.begin(), state_.end(), 0.0);
}

Biquad::Biquad(const BiquadCoeffs<double>& c)
{
  if (!(std::abs(c.a0) > 0.0) || !std::isfinite(c.a0)) {
    throw NumericError("Biquad: a0 must be finite and non-zero");
  }
  b0_ = c.b0 / c.a0;
  b1_ = c.b1 / c.a0;
  b2_ = c.b2 / c.a0;
  a1_ = c.a1 / c.a0;
  a2_ = c.a2 / c.a0;
}

double Biquad::process(double x)
{
  const double y = b0_ * x + z1_;
  z1_ = b1_ * x - a1_ * y + z2_;
  z2_ = b2_ * x - a2_ * y;
  return y;
}

ChannelEngine::ChannelEngine(const ChannelParams& ch, std::size_t frame_length)
    : ch_(ch), delay_(frame_length / 2), apf_(ch.variant == Variant::ApfCascade ? ch.sections : 0)
{
  if (ch.variant == Variant::ApfCascade && ch.sections < 1) {
    throw InvalidArgument("ChannelEngine: all-pass variant needs K >= 1");
  }
  if (!ch.bypass_svf1) {
    svf1_ = Biquad(svf_coefficients(ch.svf1));
  }
  if (!ch.bypass_svf2) {
    svf2_ = Biquad(svf_coefficients(ch.svf2));
  }
}

double ChannelEngine::tick(double x, double modulation)
{
  const bool is_delay = ch_.variant == Variant::DelayLine;
  if (!is_delay && !(std::abs(modulation) < 1.0)) {
    throw InstabilityError("ChannelEngine: all-pass pole outside the unit circle");
  }
  double gs;
  double rs;
  if (is_delay) {
    const auto t = delay_.tap(modulation);
    gs = t.gain;
    rs = t.rest;
  } else {
    const auto a = apf_.affine(modulation);
    gs = a.gain;
    rs = a.offset;
  }
  const double a1 = ch_.comb.a1;
  // Loop transfer in front of the feedback gain: g_loop u + r_loop.
  double g_loop = gs;
  double r_loop = rs;
  if (ch_.feedback == FeedbackConfig::II && !ch_.bypass_svf2) {
    g_loop = svf2_.gain() * gs;
    r_loop = svf2_.gain() * rs + svf2_.offset();
  }
  const double den = 1.0 - a1 * g_loop;
  if (std::abs(den) < 1e-12) {
    throw InstabilityError("ChannelEngine: delay-free feedback loop is singular");
  }
  const double u = (x + a1 * r_loop) / den;

  double wet;
  if (is_delay) {
    wet = gs * u + rs;
    delay_.push(u);
  } else {
    wet = apf_.process(modulation, u);
  }
  const double wet2 = ch_.bypass_svf2 ? wet : svf2_.process(wet);
  const double mix = ch_.comb.b0 * u + ch_.comb.b1 * wet2;
  return ch_.bypass_svf1 ? mix : svf1_.process(mix);
}

void ChannelEngine::reset()
{
  delay_.reset();
  apf_.reset();
  svf1_.reset();
  svf2_.reset();
}

void EnergyWatchdog::observe(double in, double out, std::size_t n)
{
  if (!std::isfinite(out)) {
    throw InstabilityError("watchdog: non-finite output at sample " + std::to_string(n));
  }
  in_energy_ += in * in;
  out_energy_ += out * out;
  // RMS ratio 1e3 (60 dB) over the samples seen so far.
  if (out_energy_ > 1e6 * in_energy_ && out_energy_ > 1e-20) {
    throw InstabilityError("watchdog: output RMS exceeds input RMS by 60 dB at sample "
                           + std::to_string(n));
  }
}

std::vector<double> process_modulated(const ChannelParams& ch, std::span<const double> modulation,
                                      std::span<const double> x, std::size_t frame_length)
{
  if (modulation.size() < x.size()) {
    throw InvalidArgument("process_modulated: modulation shorter than input");
  }
  ChannelEngine engine(ch, frame_length);
  EnergyWatchdog dog;
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    y[n] = engine.tick(x[n], modulation[n]);
    dog.observe(x[n], y[n], n);
  }
  return y;
}

std::vector<double> process_flanger(const ChannelParams& ch, std::span<const double> control,
                                    std::span<const double> x, std::size_t frame_length)
{
  if (ch.variant != Variant::DelayLine) {
    throw InvalidArgument("process_flanger: channel is not a delay-line variant");
  }
  std::vector<double> d(control.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = delay_from_control(control[i], frame_length);
  }
  return process_modulated(ch, d, x, frame_length);
}

std::vector<double> process_phaser(const ChannelParams& ch, std::span<const double> control,
                                   std::span<const double> x, std::size_t frame_length)
{
  if (ch.variant != Variant::ApfCascade) {
    throw InvalidArgument("process_phaser: channel is not an all-pass variant");
  }
  std::vector<double> p(control.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = pole_from_control(control[i]);
  }
  return process_modulated(ch, p, x, frame_length);
}

std::vector<double> render_channel_control(const ChannelParams& ch, const ModelParams& params,
                                           std::size_t length, const RenderOptions& opts)
{
  const auto c = control_series(ch.lfo);
  const std::size_t n = params.frame_length;
  if (opts.linear_control) {
    std::vector<double> rotated(c.size());
    for (std::size_t m = 0; m < c.size(); ++m) {
      rotated[m] = c[(m + opts.start_frame) % c.size()];
    }
    return render_control_linear(rotated, n, length);
  }
  const double frame_rate = params.sample_rate / static_cast<double>(n);
  const LfoWavetable wt = extract_wavetable(c, frame_rate, params.sample_rate);
  // Table index 0 is the centre of frame 0, i.e. audio sample N/2.
  const double inc = opts.rate_scale * wt.f0 * static_cast<double>(wt.table.size())
                     / wt.sample_rate;
  const double start = (static_cast<double>(opts.start_frame * n) - 0.5 * static_cast<double>(n))
                       * inc;
  return render_lfo(wt, opts.rate_scale, length, start);
}

std::vector<double> process(const ModelParams& params, std::span<const double> x,
                            const RenderOptions& opts)
{
  if (params.channels.empty()) {
    throw InvalidArgument("process: model has no channels");
  }
  std::vector<double> y(x.size(), 0.0);
  for (const auto& ch : params.channels) {
    const auto c = render_channel_control(ch, params, x.size(), opts);
    const auto yc = ch.variant == Variant::DelayLine
                        ? process_flanger(ch, c, x, params.frame_length)
                        : process_phaser(ch, c, x, params.frame_length);
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] += yc[i];
    }
  }
  return y;
}

} // namespace modfx
