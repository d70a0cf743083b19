#include "modfx/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "modfx/error.hpp"
#include "modfx/grad.hpp"
#include "modfx/spectral.hpp"
#include "modfx/tdengine.hpp"

namespace modfx {

double spectral_loss(std::span<const HalfSpectrum> predicted, std::span<const HalfSpectrum> target,
                     const std::optional<HalfSpectrum>& emphasis)
{
  if (predicted.size() != target.size() || target.empty()) {
    throw InvalidArgument("spectral_loss: frame counts differ or are zero");
  }
  const std::size_t bins = target.front().size();
  if (bins < 2) {
    throw InvalidArgument("spectral_loss: spectra need at least two bins");
  }
  const std::size_t n = 2 * (bins - 1);
  for (std::size_t m = 0; m < target.size(); ++m) {
    if (predicted[m].size() != bins || target[m].size() != bins) {
      throw InvalidArgument("spectral_loss: spectrum lengths differ");
    }
  }
  const auto w = loss_weights(n, emphasis);
  const double den = loss_denominator(target, w);
  double num = 0.0;
  for (std::size_t m = 0; m < target.size(); ++m) {
    for (std::size_t k = 0; k < bins; ++k) {
      num += w[k] * std::norm(target[m][k] - predicted[m][k]);
    }
  }
  return num / den;
}

double esr(std::span<const double> target, std::span<const double> predicted)
{
  if (target.size() != predicted.size()) {
    throw InvalidArgument("esr: signals differ in length");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double e = target[i] - predicted[i];
    num += e * e;
    den += target[i] * target[i];
  }
  if (!(den > 0.0)) {
    throw DegenerateError("esr: target is silent");
  }
  return num / den;
}

double esr_db(std::span<const double> target, std::span<const double> predicted)
{
  const double e = esr(target, predicted);
  if (!(e > 0.0)) {
    return kEsrFloorDb;
  }
  return std::max(kEsrFloorDb, 10.0 * std::log10(e));
}

namespace {

std::vector<double> hann(std::size_t n)
{
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

double log_stft_distance(std::span<const double> a, std::span<const double> b, std::size_t n)
{
  const auto win = hann(n);
  const std::size_t hop = n / 4;
  std::vector<double> fa(n);
  std::vector<double> fb(n);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start == 0 || start < a.size(); start += hop) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = start + i;
      fa[i] = j < a.size() ? a[j] * win[i] : 0.0;
      fb[i] = j < b.size() ? b[j] * win[i] : 0.0;
    }
    const auto sa = rfft(fa);
    const auto sb = rfft(fb);
    for (std::size_t k = 0; k < sa.size(); ++k) {
      acc += std::abs(std::log(std::abs(sa[k]) + 1e-7) - std::log(std::abs(sb[k]) + 1e-7));
    }
    count += sa.size();
  }
  return acc / static_cast<double>(count);
}

} // namespace

double mrsl(std::span<const double> target, std::span<const double> predicted)
{
  if (target.size() != predicted.size()) {
    throw InvalidArgument("mrsl: signals differ in length");
  }
  double acc = 0.0;
  for (std::size_t n : {512u, 1024u, 2048u}) {
    acc += log_stft_distance(target, predicted, n);
  }
  return acc / 3.0;
}

void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& state,
               const AdamSettings& s)
{
  if (grad.size() != theta.size()) {
    throw InvalidArgument("adam_step: gradient and parameter sizes differ");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw NumericError("adam_step: non-finite gradient, run aborted");
    }
  }
  if (state.m.empty()) {
    state.m.assign(theta.size(), 0.0);
    state.v.assign(theta.size(), 0.0);
  } else if (state.m.size() != theta.size()) {
    throw InvalidArgument("adam_step: optimiser state does not match parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = s.beta1 * state.m[i] + (1.0 - s.beta1) * grad[i];
    state.v[i] = s.beta2 * state.v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    theta[i] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.epsilon);
  }
}

std::string to_string(Emphasis e)
{
  return e == Emphasis::Tri ? "tri" : "none";
}

Emphasis emphasis_from_string(const std::string& s)
{
  if (s == "none") {
    return Emphasis::None;
  }
  if (s == "tri") {
    return Emphasis::Tri;
  }
  throw InvalidArgument("unknown pre-emphasis '" + s + "' (expected none or tri)");
}

ModelShape TrainConfig::shape() const
{
  ModelShape s;
  s.variant = variant;
  s.sections = sections;
  s.feedback = feedback;
  s.channels = channels;
  s.frame_length = frame_length;
  s.frame_count = frame_count();
  s.sample_rate = sample_rate;
  return s;
}

TrainConfig full_profile()
{
  TrainConfig c;
  c.profile = "full";
  c.signal_length = std::size_t{1} << 18;
  c.iterations = 15000;
  c.seeds.resize(30);
  for (std::size_t i = 0; i < c.seeds.size(); ++i) {
    c.seeds[i] = i;
  }
  return c;
}

TrainConfig desk_profile()
{
  TrainConfig c;
  c.profile = "desk";
  c.signal_length = std::size_t{1} << 16;
  c.iterations = 2000;
  c.seeds = {0, 1, 2, 3, 4};
  return c;
}

TrainConfig profile_by_name(const std::string& name)
{
  if (name == "full") {
    return full_profile();
  }
  if (name == "desk") {
    return desk_profile();
  }
  throw InvalidArgument("unknown profile '" + name + "' (expected full or desk)");
}

void check_config(const TrainConfig& c)
{
  if (c.frame_length < 4 || !std::has_single_bit(c.frame_length)) {
    throw InvalidArgument("config: N must be a power of two >= 4");
  }
  if (c.signal_length == 0 || c.signal_length % c.frame_length != 0) {
    throw InvalidArgument("config: L must be a positive multiple of N");
  }
  if (c.effective_kernel_length() > c.frame_length / 2) {
    throw InvalidArgument("config: N' must not exceed N/2");
  }
  if (c.channels == 0) {
    throw InvalidArgument("config: C must be at least 1");
  }
  if (c.variant == Variant::ApfCascade && c.sections < 1) {
    throw InvalidArgument("config: K must be at least 1");
  }
  if (!(c.sample_rate > 0.0) || !(c.adam.learning_rate > 0.0)) {
    throw InvalidArgument("config: sample rate and learning rate must be positive");
  }
  if (c.jobs == 0) {
    throw InvalidArgument("config: jobs must be at least 1");
  }
}

HalfSpectrum tri_emphasis(std::size_t kernel_length, std::size_t frame_length)
{
  const Kernel tri = gen_triangular(kernel_length);
  return rfft(tri.samples, frame_length);
}

FramedInput make_training_input(const TrainConfig& config)
{
  check_config(config);
  const Kernel k = make_kernel(config.input_kind, config.effective_kernel_length(),
                               config.frame_length);
  return build_training_input(k, config.frame_length, config.frame_count());
}

SpectralBatch make_batch(const FramedInput& input, std::span<const double> target,
                         const std::optional<HalfSpectrum>& emphasis)
{
  const std::size_t len = input.frame_count * input.frame_length;
  if (target.size() != len) {
    throw DataError("training target has " + std::to_string(target.size())
                    + " samples, input has " + std::to_string(len));
  }
  SpectralBatch b;
  b.inputs = frame_spectra(input.frames);
  b.targets = frame_spectra(frame_signal(target, input.frame_length));
  b.emphasis = emphasis;
  return b;
}

TrainResult train_from(const TrainConfig& config, ModelParams init, const SpectralBatch& batch,
                       const ProgressFn& progress)
{
  TrainResult r;
  r.params = std::move(init);
  r.loss_history.reserve(config.iterations);
  auto theta = flatten(r.params);
  AdamState state;
  ad::Tape tape;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const LossAndGrad lg = grad_of_loss(r.params, batch, tape);
    if (!std::isfinite(lg.loss)) {
      throw NumericError("train: non-finite loss at iteration " + std::to_string(it));
    }
    if (it == 0) {
      tape.reserve(lg.tape_nodes);
    }
    r.loss_history.push_back(lg.loss);
    if (progress) {
      progress(it, lg.loss);
    }
    adam_step(theta, lg.grads, state, config.adam);
    unflatten(theta, r.params);
  }
  r.final_loss = model_loss(r.params, batch);
  return r;
}

TrainResult train(const TrainConfig& config, std::uint64_t seed, const FramedInput& input,
                  std::span<const double> target, const ProgressFn& progress)
{
  check_config(config);
  if (input.frame_length != config.frame_length || input.frame_count != config.frame_count()) {
    throw InvalidArgument("train: input framing does not match the config");
  }
  std::optional<HalfSpectrum> emphasis;
  if (config.emphasis == Emphasis::Tri) {
    emphasis = tri_emphasis(config.effective_kernel_length(), config.frame_length);
  }
  const SpectralBatch batch = make_batch(input, target, emphasis);
  return train_from(config, init_params(seed, config.shape()), batch, progress);
}

ValidationMetrics validate(const ModelParams& params, std::span<const double> val_input,
                           std::span<const double> val_target, bool align, double rate_scale)
{
  if (val_input.size() != val_target.size()) {
    throw DataError("validate: input and target differ in length");
  }
  double energy = 0.0;
  for (double v : val_target) {
    energy += v * v;
  }
  if (!(energy > 0.0)) {
    throw DegenerateError("validate: target is silent");
  }
  RenderOptions opts;
  opts.rate_scale = rate_scale;
  const std::size_t tries = align ? params.frame_count : 1;
  ValidationMetrics best;
  std::vector<double> best_y;
  best.esr = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < tries; ++m) {
    opts.start_frame = m;
    auto y = process(params, val_input, opts);
    const double e = esr(val_target, y);
    if (e < best.esr) {
      best.esr = e;
      best.start_frame = m;
      best_y = std::move(y);
    }
  }
  best.esr_db = best.esr > 0.0 ? std::max(kEsrFloorDb, 10.0 * std::log10(best.esr)) : kEsrFloorDb;
  best.mrsl = mrsl(val_target, best_y);
  return best;
}

double ci_half_width(std::span<const double> values)
{
  const std::size_t n = values.size();
  if (n < 2) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double mean = 0.0;
  for (double v : values) {
    mean += v;
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
  }
  const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
  return 0.95 * sigma / std::sqrt(static_cast<double>(n));
}

double median(std::vector<double> values)
{
  if (values.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void summarize(RunStats& stats)
{
  std::vector<double> ok;
  stats.succeeded = 0;
  stats.failed = 0;
  stats.best_esr_db = std::numeric_limits<double>::quiet_NaN();
  for (const auto& o : stats.outcomes) {
    if (!o.ok) {
      ++stats.failed;
      continue;
    }
    ++stats.succeeded;
    ok.push_back(o.metrics.esr_db);
    if (std::isnan(stats.best_esr_db) || o.metrics.esr_db < stats.best_esr_db) {
      stats.best_esr_db = o.metrics.esr_db;
      stats.best_seed = o.seed;
    }
  }
  stats.median_esr_db = median(ok);
  stats.ci_half_width = ci_half_width(ok);
}

RunStats multi_seed(const TrainConfig& config, const ExperimentData& data, const SeedDoneFn& on_done)
{
  check_config(config);
  if (config.seeds.size() < 2) {
    throw InvalidArgument("multi_seed: at least two seeds are required");
  }
  RunStats stats;
  stats.trivial_esr_db = esr_db(data.val_target, data.val_input);
  stats.outcomes.resize(config.seeds.size());

  std::optional<HalfSpectrum> emphasis;
  if (config.emphasis == Emphasis::Tri) {
    emphasis = tri_emphasis(config.effective_kernel_length(), config.frame_length);
  }
  const SpectralBatch batch = make_batch(data.input, data.target, emphasis);

  std::atomic<std::size_t> next{0};
  std::mutex report;
  auto worker = [&] {
    for (std::size_t i = next++; i < config.seeds.size(); i = next++) {
      SeedOutcome& o = stats.outcomes[i];
      o.seed = config.seeds[i];
      try {
        o.result = train_from(config, init_params(o.seed, config.shape()), batch);
        o.metrics = validate(o.result.params, data.val_input, data.val_target, config.align);
        o.ok = true;
      } catch (const std::exception& e) {
        o.ok = false;
        o.error = e.what();
      }
      if (on_done) {
        std::lock_guard lock(report);
        on_done(o);
      }
    }
  };
  const std::size_t jobs = std::min(config.jobs, config.seeds.size());
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
      pool.emplace_back(worker);
    }
  }
  summarize(stats);
  return stats;
}

} // namespace modfx
