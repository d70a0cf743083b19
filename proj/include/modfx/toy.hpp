#pragma once

// Digital reference effects with known modulation, used as synthetic targets.
//
// Flanger: delay d(t) = d_lo + (d_hi - d_lo) (1 - cos(2 pi f t)) / 2.
// Phaser: break frequency f_b(t) = f_lo (f_hi / f_lo)^((1 - cos(2 pi f t)) / 2),
//         pole p = (1 - tan(pi f_b / Fs)) / (1 + tan(pi f_b / Fs)).
// Both run through the time-domain engine with SVFs omitted.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "modfx/diffmodel.hpp"

namespace modfx {

enum class ToyKind { Flanger, Phaser };

std::string to_string(ToyKind k);
ToyKind toy_kind_from_string(const std::string& s);

struct ToyConfig {
  std::size_t frame_length = 1024; // N, bounds the model's delay range
  double sample_rate = 44100.0;
  double lfo_rate_hz = 0.5;
  double time_offset_s = 0.0;      // LFO evaluated at t + offset
  double delay_lo_ms = 1.0;
  double delay_hi_ms = 8.0;
  double break_lo_hz = 100.0;
  double break_hi_hz = 4000.0;
  int sections = 6;
  double b0 = 1.0;
  double b1 = 1.0;
  double a1 = 0.5;
};

/// LFO rate giving `periods` full cycles over `length` samples.
double lfo_rate_for_periods(double periods, std::size_t length, double sample_rate);

/// Modulation at time t seconds: delay in samples or all-pass pole.
double toy_modulation_at(ToyKind kind, const ToyConfig& cfg, double t);

/// Per-sample modulation for n = 0..length-1.
std::vector<double> toy_modulation(ToyKind kind, const ToyConfig& cfg, std::size_t length);

/// Modulation at the frame centres (m + 0.5) N.
std::vector<double> toy_frame_modulation(ToyKind kind, const ToyConfig& cfg,
                                         std::size_t frame_count);

/// Channel with the toy comb gains, both SVFs bypassed and an empty LFO.
ChannelParams toy_channel(ToyKind kind, const ToyConfig& cfg);

std::vector<double> make_toy_target(ToyKind kind, std::span<const double> x, const ToyConfig& cfg);

/// Model parameters that reproduce the toy effect at frame resolution: the
/// LFO is an identity MLP fed with the inverse-mapped frame modulation.
ModelParams toy_model_params(ToyKind kind, const ToyConfig& cfg, std::size_t frame_count);

/// Inverse of the control mappings: c such that d(c) = delay, p(c) = pole.
double control_from_delay(double delay, std::size_t frame_length);
double control_from_pole(double pole);

/// Plucked-string test signal (Karplus-Strong), a few notes of random pitch.
std::vector<double> karplus_strong(std::size_t length, double sample_rate, std::uint64_t seed);

} // namespace modfx
