#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modfx/diffmodel.hpp"
#include "modfx/loss.hpp"
#include "modfx/signals.hpp"

namespace modfx {

// ---------------------------------------------------------------------------
// Metrics

/// Normalised spectral loss over frame spectra; h_L absent means all ones.
double spectral_loss(std::span<const HalfSpectrum> predicted, std::span<const HalfSpectrum> target,
                     const std::optional<HalfSpectrum>& emphasis = std::nullopt);

/// Error-to-signal ratio sum (y - yhat)^2 / sum y^2.
double esr(std::span<const double> target, std::span<const double> predicted);

inline constexpr double kEsrFloorDb = -120.0;

/// 10 log10(esr), clamped below at kEsrFloorDb.
double esr_db(std::span<const double> target, std::span<const double> predicted);

/// Multi-resolution spectral loss: mean over FFT sizes {512, 1024, 2048}
/// (Hann window, hop n/4) of the mean absolute difference of
/// log(|STFT| + 1e-7). Magnitude only, so phase-blind.
double mrsl(std::span<const double> target, std::span<const double> predicted);

// ---------------------------------------------------------------------------
// Optimiser

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update in place. Throws NumericError on a
/// non-finite gradient before touching any state.
void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& state,
               const AdamSettings& settings);

// ---------------------------------------------------------------------------
// Training

enum class Emphasis { None, Tri };

std::string to_string(Emphasis e);
Emphasis emphasis_from_string(const std::string& s);

struct TrainConfig {
  std::string profile = "full";
  Variant variant = Variant::DelayLine;
  FeedbackConfig feedback = FeedbackConfig::I;
  std::size_t channels = 1;          // C
  int sections = 6;                  // K
  std::size_t frame_length = 1024;   // N
  std::size_t kernel_length = 0;     // N'; 0 means N/2
  double sample_rate = 44100.0;
  std::size_t signal_length = std::size_t{1} << 18; // L
  KernelKind input_kind = KernelKind::Tri;
  Emphasis emphasis = Emphasis::None;
  std::size_t iterations = 15000;
  AdamSettings adam;
  std::vector<std::uint64_t> seeds; // N_res
  std::size_t jobs = 1;
  bool align = true;

  std::size_t effective_kernel_length() const
  {
    return kernel_length == 0 ? frame_length / 2 : kernel_length;
  }
  std::size_t frame_count() const { return signal_length / frame_length; }
  ModelShape shape() const;
};

/// Full-scale settings: L = 2^18, 15k iterations, 30 seeds.
TrainConfig full_profile();
/// Reduced settings for acceptance runs: L = 2^16, 2k iterations, 5 seeds.
TrainConfig desk_profile();
TrainConfig profile_by_name(const std::string& name);

/// Throws InvalidArgument when N is not a power of two, L is not a multiple
/// of N, N' > N/2, or other fields are out of range.
void check_config(const TrainConfig& config);

/// Spectrum of the length-N' triangle zero-padded to N.
HalfSpectrum tri_emphasis(std::size_t kernel_length, std::size_t frame_length);

/// Training input for a config: M frames of the chosen kernel.
FramedInput make_training_input(const TrainConfig& config);

/// Frame spectra of input and target plus the optional loss emphasis.
SpectralBatch make_batch(const FramedInput& input, std::span<const double> target,
                         const std::optional<HalfSpectrum>& emphasis);

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_history; // loss before each update
  double final_loss = 0.0;          // loss of the returned params
};

using ProgressFn = std::function<void(std::size_t iteration, double loss)>;

/// Full-batch Adam on the spectral loss from init_params(seed, config.shape()).
TrainResult train(const TrainConfig& config, std::uint64_t seed, const FramedInput& input,
                  std::span<const double> target, const ProgressFn& progress = {});

/// Same, starting from explicit parameters.
TrainResult train_from(const TrainConfig& config, ModelParams init, const SpectralBatch& batch,
                       const ProgressFn& progress = {});

// ---------------------------------------------------------------------------
// Validation

struct ValidationMetrics {
  double esr = 0.0;
  double esr_db = 0.0;
  double mrsl = 0.0;
  std::size_t start_frame = 0; // chosen LFO start index
};

/// Renders val_input through the time-domain engine. With `align`, every
/// cyclic LFO start index 0..M-1 is tried and the lowest-ESR one kept.
ValidationMetrics validate(const ModelParams& params, std::span<const double> val_input,
                           std::span<const double> val_target, bool align,
                           double rate_scale = 1.0);

// ---------------------------------------------------------------------------
// Multi-seed harness

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  TrainResult result;
  ValidationMetrics metrics;
};

struct RunStats {
  std::vector<SeedOutcome> outcomes; // in config.seeds order
  double trivial_esr_db = 0.0;       // input passed through unchanged
  double median_esr_db = 0.0;
  double best_esr_db = 0.0;
  std::uint64_t best_seed = 0;
  double ci_half_width = 0.0;        // 0.95 sigma / sqrt(N_res)
  std::size_t succeeded = 0;
  std::size_t failed = 0;
};

/// 0.95 * sample standard deviation / sqrt(n); NaN when n < 2.
double ci_half_width(std::span<const double> values);

double median(std::vector<double> values);

/// Fills the summary fields from the outcomes; failed seeds are excluded.
void summarize(RunStats& stats);

struct ExperimentData {
  FramedInput input;
  std::vector<double> target;
  std::vector<double> val_input;
  std::vector<double> val_target;
};

using SeedDoneFn = std::function<void(const SeedOutcome&)>;

/// Independent train + validate per seed, on up to config.jobs threads.
/// Results do not depend on execution order or thread count.
RunStats multi_seed(const TrainConfig& config, const ExperimentData& data,
                    const SeedDoneFn& on_done = {});

} // namespace modfx
