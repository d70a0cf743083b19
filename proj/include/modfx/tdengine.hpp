#pragma once

// Zero-latency time-domain renderer for trained models.
//
// Per channel and per sample, with S the modulated phase shifter (fractional
// delay line or all-pass cascade):
//   config I :  u = x + a1 S(u)            y = SVF1(b0 u + b1 SVF2(S(u)))
//   config II:  u = x + a1 SVF2(S(u))      y = SVF1(b0 u + b1 SVF2(S(u)))
// Every stage is affine in its current input (out = g * in + r), so the
// delay-free loop is solved exactly each sample instead of adding a unit delay.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "modfx/diffmodel.hpp"
#include "modfx/svf.hpp"

namespace modfx {

struct LfoWavetable {
  std::vector<double> table; // one period at audio rate
  double f0 = 0.0;           // Hz
  double frame_rate = 0.0;   // F_f = F_s / N
  double sample_rate = 0.0;  // F_s
};

/// Fundamental of a frame-rate control series from the peak of its 8x
/// zero-padded magnitude spectrum, refined by a least-squares sinusoid fit
/// near the peak and then by self-similarity when the series holds more than
/// one period. Throws DataError when there is no periodic component.
double estimate_f0(std::span<const double> control, double frame_rate);

/// One period of the control series starting at its first sample, resampled
/// to the audio rate with cubic interpolation at the estimate_f0 period.
/// A series without a periodic component is taken as one full cycle.
LfoWavetable extract_wavetable(std::span<const double> control, double frame_rate,
                               double sample_rate);

/// Periodic read of the wavetable. `start_phase` is in table samples.
std::vector<double> render_lfo(const LfoWavetable& wt, double rate_scale, std::size_t length,
                               double start_phase = 0.0);

/// Debug path: frame-rate control linearly interpolated between frame
/// centres (m + 0.5) N, held constant outside them.
std::vector<double> render_control_linear(std::span<const double> control,
                                          std::size_t frame_length, std::size_t length);

/// Four-point Lagrange weights for nodes 0..3 evaluated at t in [0, 3].
std::array<double, 4> lagrange4(double t);

class FractionalDelayLine {
public:
  explicit FractionalDelayLine(std::size_t max_delay);

  struct Tap {
    double gain; // weight of the sample about to be pushed
    double rest; // contribution of stored samples
  };

  /// Cubic Lagrange read at `delay` samples relative to the next sample.
  Tap tap(double delay) const;
  void push(double x);
  void reset();
  double max_delay() const { return max_delay_; }

private:
  double past(std::size_t j) const; // j >= 1 samples ago

  std::vector<double> buf_;
  std::size_t mask_ = 0;
  std::size_t pos_ = 0;
  double max_delay_ = 0.0;
};

class AllpassCascade {
public:
  explicit AllpassCascade(int sections) : state_(static_cast<std::size_t>(sections), 0.0) {}

  struct Affine {
    double gain;
    double offset;
  };

  Affine affine(double pole) const;
  double process(double pole, double x);
  void reset();

private:
  std::vector<double> state_;
};

class Biquad {
public:
  Biquad() = default;
  explicit Biquad(const BiquadCoeffs<double>& c);

  double gain() const { return b0_; }
  double offset() const { return z1_; }
  double process(double x);
  void reset() { z1_ = z2_ = 0.0; }

private:
  double b0_ = 1.0, b1_ = 0.0, b2_ = 0.0, a1_ = 0.0, a2_ = 0.0;
  double z1_ = 0.0, z2_ = 0.0;
};

/// Streaming single-channel engine driven by a per-sample modulation value:
/// the delay in samples for the delay variant, the pole for the all-pass one.
class ChannelEngine {
public:
  ChannelEngine(const ChannelParams& ch, std::size_t frame_length);

  double tick(double x, double modulation);
  void reset();

private:
  ChannelParams ch_;
  FractionalDelayLine delay_;
  AllpassCascade apf_;
  Biquad svf1_;
  Biquad svf2_;
};

/// Output energy watchdog: throws InstabilityError when the running output
/// RMS exceeds 1e3 times the running input RMS, or on non-finite output.
class EnergyWatchdog {
public:
  void observe(double in, double out, std::size_t n);

private:
  double in_energy_ = 0.0;
  double out_energy_ = 0.0;
};

/// Runs one channel with explicit per-sample modulation (delay or pole).
std::vector<double> process_modulated(const ChannelParams& ch, std::span<const double> modulation,
                                      std::span<const double> x, std::size_t frame_length);

/// Delay variant driven by a per-sample control c; d = N/4 (1 - cos(pi c)).
std::vector<double> process_flanger(const ChannelParams& ch, std::span<const double> control,
                                    std::span<const double> x, std::size_t frame_length);

/// All-pass variant driven by a per-sample control c; p = tanh(pi c + 0.5).
std::vector<double> process_phaser(const ChannelParams& ch, std::span<const double> control,
                                   std::span<const double> x, std::size_t frame_length);

struct RenderOptions {
  double rate_scale = 1.0;
  std::size_t start_frame = 0; // cyclic LFO start index, for alignment
  bool linear_control = false; // debug: skip wavetable extraction
};

/// Per-sample control for one channel as used by `process`.
std::vector<double> render_channel_control(const ChannelParams& ch, const ModelParams& params,
                                           std::size_t length, const RenderOptions& opts);

/// Sum of all channel outputs.
std::vector<double> process(const ModelParams& params, std::span<const double> x,
                            const RenderOptions& opts = {});

} // namespace modfx
