#include "modfx/toy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "modfx/error.hpp"
#include "modfx/rng.hpp"
#include "modfx/tdengine.hpp"

namespace modfx {

namespace {

constexpr double kPi = std::numbers::pi;

double sweep(const ToyConfig& cfg, double t)
{
  return 0.5 * (1.0 - std::cos(2.0 * kPi * cfg.lfo_rate_hz * (t + cfg.time_offset_s)));
}

void check_config(ToyKind kind, const ToyConfig& cfg)
{
  if (cfg.frame_length == 0 || cfg.frame_length % 2 != 0) {
    throw InvalidArgument("toy: frame length must be even and positive");
  }
  if (!(cfg.sample_rate > 0.0) || !(cfg.lfo_rate_hz > 0.0)) {
    throw InvalidArgument("toy: sample rate and LFO rate must be positive");
  }
  if (kind == ToyKind::Flanger) {
    const double hi = cfg.delay_hi_ms * 1e-3 * cfg.sample_rate;
    if (cfg.delay_lo_ms < 0.0 || cfg.delay_hi_ms < cfg.delay_lo_ms
        || hi > 0.5 * static_cast<double>(cfg.frame_length)) {
      throw InvalidArgument("toy: flanger delay range must lie within [0, N/2] samples");
    }
  } else {
    if (!(cfg.break_lo_hz > 0.0) || cfg.break_hi_hz < cfg.break_lo_hz
        || cfg.break_hi_hz >= 0.5 * cfg.sample_rate) {
      throw InvalidArgument("toy: phaser break frequencies must lie in (0, Fs/2)");
    }
    if (cfg.sections < 1) {
      throw InvalidArgument("toy: phaser needs K >= 1");
    }
  }
}

} // namespace

std::string to_string(ToyKind k)
{
  return k == ToyKind::Flanger ? "flanger" : "phaser";
}

ToyKind toy_kind_from_string(const std::string& s)
{
  if (s == "flanger") {
    return ToyKind::Flanger;
  }
  if (s == "phaser") {
    return ToyKind::Phaser;
  }
  throw InvalidArgument("unknown toy effect '" + s + "' (expected flanger or phaser)");
}

double lfo_rate_for_periods(double periods, std::size_t length, double sample_rate)
{
  if (length == 0) {
    throw InvalidArgument("lfo_rate_for_periods: zero length");
  }
  return periods * sample_rate / static_cast<double>(length);
}

double toy_modulation_at(ToyKind kind, const ToyConfig& cfg, double t)
{
  const double s = sweep(cfg, t);
  if (kind == ToyKind::Flanger) {
    const double lo = cfg.delay_lo_ms * 1e-3 * cfg.sample_rate;
    const double hi = cfg.delay_hi_ms * 1e-3 * cfg.sample_rate;
    return lo + (hi - lo) * s;
  }
  const double fb = cfg.break_lo_hz * std::pow(cfg.break_hi_hz / cfg.break_lo_hz, s);
  const double g = std::tan(kPi * fb / cfg.sample_rate);
  return (1.0 - g) / (1.0 + g);
}

std::vector<double> toy_modulation(ToyKind kind, const ToyConfig& cfg, std::size_t length)
{
  check_config(kind, cfg);
  std::vector<double> out(length);
  for (std::size_t n = 0; n < length; ++n) {
    out[n] = toy_modulation_at(kind, cfg, static_cast<double>(n) / cfg.sample_rate);
  }
  return out;
}

std::vector<double> toy_frame_modulation(ToyKind kind, const ToyConfig& cfg,
                                         std::size_t frame_count)
{
  check_config(kind, cfg);
  std::vector<double> out(frame_count);
  const double n = static_cast<double>(cfg.frame_length);
  for (std::size_t m = 0; m < frame_count; ++m) {
    out[m] = toy_modulation_at(kind, cfg, (static_cast<double>(m) + 0.5) * n / cfg.sample_rate);
  }
  return out;
}

ChannelParams toy_channel(ToyKind kind, const ToyConfig& cfg)
{
  ChannelParams ch;
  ch.variant = kind == ToyKind::Flanger ? Variant::DelayLine : Variant::ApfCascade;
  ch.sections = kind == ToyKind::Flanger ? 1 : cfg.sections;
  ch.feedback = FeedbackConfig::I;
  ch.comb = {cfg.b0, cfg.b1, cfg.a1};
  ch.bypass_svf1 = true;
  ch.bypass_svf2 = true;
  return ch;
}

std::vector<double> make_toy_target(ToyKind kind, std::span<const double> x, const ToyConfig& cfg)
{
  const auto mod = toy_modulation(kind, cfg, x.size());
  return process_modulated(toy_channel(kind, cfg), mod, x, cfg.frame_length);
}

double control_from_delay(double delay, std::size_t frame_length)
{
  const double q = 1.0 - 4.0 * delay / static_cast<double>(frame_length);
  return std::acos(std::clamp(q, -1.0, 1.0)) / kPi;
}

double control_from_pole(double pole)
{
  if (!(std::abs(pole) < 1.0)) {
    throw InvalidArgument("control_from_pole: |p| must be < 1");
  }
  return (std::atanh(pole) - 0.5) / kPi;
}

ModelParams toy_model_params(ToyKind kind, const ToyConfig& cfg, std::size_t frame_count)
{
  const auto mod = toy_frame_modulation(kind, cfg, frame_count);
  std::vector<double> c(frame_count);
  for (std::size_t m = 0; m < frame_count; ++m) {
    c[m] = kind == ToyKind::Flanger ? control_from_delay(mod[m], cfg.frame_length)
                                    : control_from_pole(mod[m]);
  }
  ModelParams p;
  p.frame_length = cfg.frame_length;
  p.frame_count = frame_count;
  p.sample_rate = cfg.sample_rate;
  ChannelParams ch = toy_channel(kind, cfg);
  ch.lfo = identity_lfo(c);
  p.channels.push_back(std::move(ch));
  return p;
}

std::vector<double> karplus_strong(std::size_t length, double sample_rate, std::uint64_t seed)
{
  Rng rng(seed);
  std::vector<double> y(length, 0.0);
  std::size_t onset = 0;
  const auto max_note = static_cast<std::size_t>(2.0 * sample_rate);
  while (onset < length) {
    // E2..E5, equal-tempered.
    const double semis = std::floor(rng.uniform(0.0, 36.0));
    const double f = 82.4069 * std::pow(2.0, semis / 12.0);
    const auto period = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(sample_rate / f)));
    std::vector<double> ring(period);
    for (double& v : ring) {
      v = rng.uniform(-1.0, 1.0);
    }
    const double gain = rng.uniform(0.3, 0.6);
    std::size_t idx = 0;
    const std::size_t stop = std::min(length, onset + max_note);
    for (std::size_t n = onset; n < stop; ++n) {
      const std::size_t nxt = (idx + 1) % period;
      const double out = ring[idx];
      ring[idx] = 0.996 * 0.5 * (ring[idx] + ring[nxt]);
      idx = nxt;
      y[n] += gain * out;
    }
    onset += static_cast<std::size_t>(rng.uniform(0.2, 0.6) * sample_rate);
  }
  return y;
}

} // namespace modfx
