#include "modfx/diffmodel.hpp"

#include <cmath>

#include "modfx/rng.hpp"

namespace modfx {

std::string to_string(Variant v) { return v == Variant::DelayLine ? "delay" : "apf"; }

std::string to_string(FeedbackConfig f) { return f == FeedbackConfig::I ? "i" : "ii"; }

Variant variant_from_string(const std::string& s)
{
  if (s == "delay" || s == "flanger" || s == "chorus") {
    return Variant::DelayLine;
  }
  if (s == "apf" || s == "phaser") {
    return Variant::ApfCascade;
  }
  throw InvalidArgument("unknown variant '" + s + "' (expected delay or apf)");
}

FeedbackConfig feedback_from_string(const std::string& s)
{
  if (s == "i" || s == "I" || s == "1") {
    return FeedbackConfig::I;
  }
  if (s == "ii" || s == "II" || s == "2") {
    return FeedbackConfig::II;
  }
  throw InvalidArgument("unknown feedback configuration '" + s + "' (expected i or ii)");
}

namespace {

bool same_channel(const ChannelParams& a, const ChannelParams& b)
{
  if (a.variant != b.variant || a.sections != b.sections || a.feedback != b.feedback
      || a.bypass_svf1 != b.bypass_svf1 || a.bypass_svf2 != b.bypass_svf2
      || a.lfo.lut.size() != b.lfo.lut.size()) {
    return false;
  }
  std::vector<double> va;
  std::vector<double> vb;
  for_each_param(a, [&](const std::string&, const double& v) { va.push_back(v); });
  for_each_param(b, [&](const std::string&, const double& v) { vb.push_back(v); });
  return va == vb;
}

} // namespace

bool ModelParams::operator==(const ModelParams& o) const
{
  if (frame_length != o.frame_length || frame_count != o.frame_count
      || sample_rate != o.sample_rate || channels.size() != o.channels.size()) {
    return false;
  }
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (!same_channel(channels[i], o.channels[i])) {
      return false;
    }
  }
  return true;
}

std::size_t param_count(const ModelParams& params)
{
  std::size_t n = 0;
  for (const auto& ch : params.channels) {
    for_each_param(ch, [&](const std::string&, const double&) { ++n; });
  }
  return n;
}

std::vector<double> flatten(const ModelParams& params)
{
  std::vector<double> out;
  out.reserve(param_count(params));
  for (const auto& ch : params.channels) {
    for_each_param(ch, [&](const std::string&, const double& v) { out.push_back(v); });
  }
  return out;
}

void unflatten(std::span<const double> values, ModelParams& params)
{
  if (values.size() != param_count(params)) {
    throw InvalidArgument("unflatten: expected " + std::to_string(param_count(params))
                          + " values, got " + std::to_string(values.size()));
  }
  std::size_t i = 0;
  for (auto& ch : params.channels) {
    for_each_param(ch, [&](const std::string&, double& v) { v = values[i++]; });
  }
}

std::vector<std::string> param_names(const ModelParams& params)
{
  std::vector<std::string> names;
  for (std::size_t c = 0; c < params.channels.size(); ++c) {
    const std::string prefix = "ch" + std::to_string(c) + ".";
    for_each_param(params.channels[c],
                   [&](const std::string& n, const double&) { names.push_back(prefix + n); });
  }
  return names;
}

double lfo_forward(const LfoParams& lfo, std::size_t m) { return lfo_forward<double>(lfo, m); }

VariantResponse delay_variant_response(double control, const FreqGrid& grid)
{
  const double d = delay_from_control(control, grid.n);
  return {delay_response(d, grid), d};
}

VariantResponse phaser_variant_response(double control, int sections, const FreqGrid& grid)
{
  const double p = pole_from_control(control);
  return {apf_cascade_response(p, sections, grid), p};
}

HalfSpectrum frame_response(const ChannelParams& ch, std::size_t m, const FreqGrid& grid)
{
  const double c = lfo_forward(ch.lfo, m);
  const auto filters = channel_filters(ch, grid);
  std::vector<Cplx<double>> s;
  std::vector<Cplx<double>> h;
  variant_bins(ch, c, grid, s);
  combine_bins(ch, filters, s, h);
  HalfSpectrum out(grid.n);
  for (std::size_t k = 0; k < h.size(); ++k) {
    out[k] = to_std(h[k]);
  }
  return out;
}

std::vector<double> control_series(const LfoParams& lfo)
{
  std::vector<double> c(lfo.lut.size());
  for (std::size_t m = 0; m < c.size(); ++m) {
    c[m] = lfo_forward(lfo, m);
  }
  return c;
}

std::vector<HalfSpectrum> fs_forward(const ModelParams& params,
                                     std::span<const HalfSpectrum> inputs)
{
  if (inputs.size() != params.frame_count) {
    throw InvalidArgument("fs_forward: got " + std::to_string(inputs.size())
                          + " frames, model has LUT length " + std::to_string(params.frame_count));
  }
  const FreqGrid grid(params.frame_length);
  std::vector<HalfSpectrum> out(inputs.size(), HalfSpectrum(params.frame_length));
  std::vector<Cplx<double>> s;
  std::vector<Cplx<double>> h;
  for (const auto& ch : params.channels) {
    if (ch.lfo.lut.size() != params.frame_count) {
      throw InvalidArgument("fs_forward: channel LUT length does not match frame count");
    }
    const auto filters = channel_filters(ch, grid);
    for (std::size_t m = 0; m < inputs.size(); ++m) {
      if (inputs[m].size() != grid.size()) {
        throw InvalidArgument("fs_forward: input spectrum has wrong bin count");
      }
      variant_bins(ch, lfo_forward(ch.lfo, m), grid, s);
      combine_bins(ch, filters, s, h);
      for (std::size_t k = 0; k < grid.size(); ++k) {
        out[m][k] += inputs[m][k] * to_std(h[k]);
      }
    }
  }
  return out;
}

ModelParams init_params(std::uint64_t seed, const ModelShape& shape)
{
  if (shape.channels == 0) {
    throw InvalidArgument("init_params: need at least one channel");
  }
  if (shape.variant == Variant::ApfCascade && shape.sections < 1) {
    throw InvalidArgument("init_params: all-pass variant needs K >= 1");
  }
  Rng rng(seed);
  ModelParams p;
  p.frame_length = shape.frame_length;
  p.frame_count = shape.frame_count;
  p.sample_rate = shape.sample_rate;
  const double lut_sigma = std::sqrt(1.0 / (2.0 * std::numbers::pi));
  const double w2_bound = std::sqrt(1.0 / static_cast<double>(kMlpWidth));
  for (std::size_t c = 0; c < shape.channels; ++c) {
    ChannelParams ch;
    ch.variant = shape.variant;
    ch.sections = shape.sections;
    ch.feedback = shape.feedback;
    ch.comb = {1.0, 1.0, 0.0};
    for (SVFParams* svf : {&ch.svf1, &ch.svf2}) {
      svf->f_raw = rng.normal(-std::numbers::pi, 1.0);
      svf->r_raw = rng.normal(0.0, 1.0);
      svf->m_low = rng.uniform(0.5, 1.5);
      svf->m_band = rng.uniform(0.5, 1.5);
      svf->m_high = rng.uniform(0.5, 1.5);
    }
    ch.lfo.lut.resize(shape.frame_count);
    for (double& v : ch.lfo.lut) {
      v = rng.normal(0.0, lut_sigma);
    }
    for (double& v : ch.lfo.w1) {
      v = rng.uniform(-1.0, 1.0); // fan-in 1
    }
    ch.lfo.b1.fill(0.0);
    for (double& v : ch.lfo.w2) {
      v = rng.uniform(-w2_bound, w2_bound);
    }
    ch.lfo.b2 = 0.0;
    p.channels.push_back(std::move(ch));
  }
  return p;
}

LfoParams identity_lfo(std::span<const double> control)
{
  constexpr double eps = 1e-4;
  LfoParams lfo;
  lfo.lut.assign(control.begin(), control.end());
  lfo.w1.fill(0.0);
  lfo.b1.fill(0.0);
  lfo.w2.fill(0.0);
  lfo.w1[0] = eps;
  lfo.w2[0] = 1.0 / eps;
  lfo.b2 = 0.0;
  return lfo;
}

} // namespace modfx
