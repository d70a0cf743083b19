// modfx: command-line front end.
//
//   modfx gen          kernels, framed training input, test signals
//   modfx make-target  digital flanger/phaser reference outputs
//   modfx train        multi-seed training and validation
//   modfx validate     time-domain metrics for a params file
//   modfx infer        time-domain rendering of a params file
//   modfx analyze      delay / all-pass loss surfaces, delay descent
//
// --config FILE reads a TOML file whose [command] section holds defaults named
// like the long flags (e.g. [train] profile = "desk"); flags given on the
// command line override it. Exit codes: 0 success, 2 usage, 3 data error,
// 4 numeric abort.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "modfx/analysis.hpp"
#include "modfx/csv.hpp"
#include "modfx/error.hpp"
#include "modfx/params_io.hpp"
#include "modfx/signals.hpp"
#include "modfx/tdengine.hpp"
#include "modfx/toy.hpp"
#include "modfx/trainer.hpp"
#include "modfx/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace modfx;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kOutDirEnv = "MODFX_OUT_DIR";

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

std::string utc_now()
{
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects artifact paths and writes manifest.json once the command is done.
class Manifest {
public:
  Manifest(std::string command, fs::path dir) : command_(std::move(command)), dir_(std::move(dir))
  {
    started_ = utc_now();
  }

  void config(const CLI::App& app) { config_ = app.config_to_str(true, false); }
  void seeds(std::vector<std::uint64_t> s) { seeds_ = std::move(s); }
  void add(const fs::path& p) { artifacts_.push_back(p); }
  void extra(const std::string& key, json value) { extra_[key] = std::move(value); }

  fs::path write()
  {
    json doc;
    doc["tool"] = "modfx";
    doc["version"] = kVersion;
    doc["command"] = command_;
    doc["started"] = started_;
    doc["finished"] = utc_now();
    doc["config"] = config_;
    doc["seeds"] = seeds_;
    json list = json::array();
    for (const auto& p : artifacts_) {
      if (!fs::exists(p)) {
        throw DataError("manifest: artifact '" + p.string() + "' was not written");
      }
      list.push_back(fs::relative(p, dir_).generic_string());
    }
    doc["artifacts"] = list;
    for (auto& [k, v] : extra_.items()) {
      doc[k] = v;
    }
    const fs::path path = dir_ / "manifest.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << "\n";
    if (!out) {
      throw DataError("failed writing '" + path.string() + "'");
    }
    return path;
  }

private:
  std::string command_;
  fs::path dir_;
  std::string started_;
  std::string config_;
  std::vector<std::uint64_t> seeds_;
  std::vector<fs::path> artifacts_;
  json extra_ = json::object();
};

fs::path prepare_out_dir(const std::string& flag)
{
  fs::path dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    dir = env != nullptr && *env != '\0' ? fs::path(env) : fs::current_path();
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
  }
  return dir;
}

void write_text(const fs::path& path, const std::string& s)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << s;
  if (!out) {
    throw DataError("failed writing '" + path.string() + "'");
  }
}

void write_series(const fs::path& path, const std::string& x, const std::string& y,
                  const std::vector<double>& values)
{
  CsvWriter w(path, {x, y});
  for (std::size_t i = 0; i < values.size(); ++i) {
    w.cell(static_cast<std::uint64_t>(i)).cell(values[i]).end_row();
  }
  w.close();
}

Audio load_audio(const std::string& path, double expected_rate)
{
  Audio a = read_wav(path);
  if (a.sample_rate != expected_rate) {
    throw DataError("'" + path + "' has sample rate " + format_double(a.sample_rate) + " Hz, expected "
                    + format_double(expected_rate) + " Hz");
  }
  return a;
}

bool given(const CLI::Option* o)
{
  return o != nullptr && o->count() > 0;
}

// ---------------------------------------------------------------------------
// Options shared by several subcommands

struct Common {
  std::string out;
  std::string profile = "full";
  CLI::Option* profile_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c)
{
  sub->add_option("--out", c.out, std::string("Output directory (default $") + kOutDirEnv + " or cwd)");
  c.profile_opt = sub->add_option("--profile", c.profile, "Default set: full or desk")
                      ->check(CLI::IsMember({"full", "desk"}));
}

struct ToyOpts {
  std::string effect;
  double lfo_rate = 0.0; // 0: two periods over the signal
  double offset_frames = 0.0;
  double delay_lo_ms = 1.0;
  double delay_hi_ms = 8.0;
  double break_lo = 100.0;
  double break_hi = 4000.0;
  int sections = 6;
  double b0 = 1.0, b1 = 1.0, a1 = 0.5;
};

void add_toy_options(CLI::App* sub, ToyOpts& t)
{
  sub->add_option("--lfo-rate", t.lfo_rate, "Toy LFO rate in Hz (0: two periods over the signal)");
  sub->add_option("--offset-frames", t.offset_frames, "Toy LFO time offset in frames");
  sub->add_option("--delay-lo-ms", t.delay_lo_ms, "Flanger minimum delay (ms)");
  sub->add_option("--delay-hi-ms", t.delay_hi_ms, "Flanger maximum delay (ms)");
  sub->add_option("--break-lo", t.break_lo, "Phaser lowest break frequency (Hz)");
  sub->add_option("--break-hi", t.break_hi, "Phaser highest break frequency (Hz)");
  sub->add_option("--toy-K", t.sections, "Phaser all-pass sections");
  sub->add_option("--toy-b0", t.b0, "Dry gain");
  sub->add_option("--toy-b1", t.b1, "Wet gain");
  sub->add_option("--toy-a1", t.a1, "Feedback gain");
}

ToyConfig toy_config(const ToyOpts& t, std::size_t n, double fs, std::size_t length)
{
  ToyConfig c;
  c.frame_length = n;
  c.sample_rate = fs;
  c.lfo_rate_hz = t.lfo_rate > 0.0 ? t.lfo_rate : lfo_rate_for_periods(2.0, length, fs);
  c.time_offset_s = t.offset_frames * static_cast<double>(n) / fs;
  c.delay_lo_ms = t.delay_lo_ms;
  c.delay_hi_ms = t.delay_hi_ms;
  c.break_lo_hz = t.break_lo;
  c.break_hi_hz = t.break_hi;
  c.sections = t.sections;
  c.b0 = t.b0;
  c.b1 = t.b1;
  c.a1 = t.a1;
  return c;
}

std::size_t profile_length(const std::string& profile)
{
  return profile_by_name(profile).signal_length;
}

// ---------------------------------------------------------------------------
// gen

struct GenOpts {
  Common common;
  std::string kind = "tri";
  std::size_t n = 0;
  std::size_t nprime = 0;
  std::size_t length = 0;
  double fs = 44100.0;
  std::string toy;
  ToyOpts toy_opts;
  std::uint64_t seed = 0;
};

int run_gen(const CLI::App& app, GenOpts& o)
{
  const fs::path dir = prepare_out_dir(o.common.out);
  Manifest man("gen", dir);
  man.config(app);
  const std::size_t length = o.length > 0 ? o.length : profile_length(o.common.profile);

  if (o.kind == "guitar") {
    // Plucked-string validation signal.
    Audio a{karplus_strong(length, o.fs, o.seed), o.fs};
    const fs::path wav = dir / "guitar.wav";
    write_wav(wav, a);
    man.add(wav);
    man.seeds({o.seed});
    std::cout << "wrote " << wav.string() << " (" << length << " samples)\n";
    man.write();
    return kOk;
  }
  if (o.n == 0) {
    throw InvalidArgument("gen: --N is required for kernel signals");
  }
  TrainConfig tc = profile_by_name(o.common.profile);
  tc.frame_length = o.n;
  tc.kernel_length = o.nprime;
  tc.signal_length = length;
  tc.sample_rate = o.fs;
  tc.input_kind = kernel_kind_from_string(o.kind);
  const FramedInput in = make_training_input(tc);
  const Kernel k = make_kernel(tc.input_kind, tc.effective_kernel_length(), tc.frame_length);

  const fs::path kernel_csv = dir / "kernel.csv";
  write_series(kernel_csv, "n", "value", k.samples);
  man.add(kernel_csv);
  const fs::path input_wav = dir / "input.wav";
  write_wav(input_wav, {in.flatten(), o.fs});
  man.add(input_wav);
  std::cout << "wrote " << input_wav.string() << " (" << in.frame_count << " frames of N=" << o.n
            << ", N'=" << k.length() << ")\n";

  if (!o.toy.empty()) {
    const ToyKind kind = toy_kind_from_string(o.toy);
    const ToyConfig cfg = toy_config(o.toy_opts, o.n, o.fs, length);
    const fs::path target_wav = dir / "target.wav";
    write_wav(target_wav, {make_toy_target(kind, in.flatten(), cfg), o.fs});
    man.add(target_wav);
    const fs::path traj = dir / "target_modulation.csv";
    write_series(traj, "frame", kind == ToyKind::Flanger ? "delay" : "pole",
                 toy_frame_modulation(kind, cfg, in.frame_count));
    man.add(traj);
    std::cout << "wrote " << target_wav.string() << "\n";
  }
  man.write();
  return kOk;
}

// ---------------------------------------------------------------------------
// make-target

struct MakeTargetOpts {
  Common common;
  std::string input;
  std::string output = "target.wav";
  std::size_t n = 1024;
  std::size_t lfo_length = 0; // samples spanned by two LFO periods; 0 = profile L
  ToyOpts toy;
};

int run_make_target(const CLI::App& app, MakeTargetOpts& o)
{
  const fs::path dir = prepare_out_dir(o.common.out);
  Manifest man("make-target", dir);
  man.config(app);
  const Audio x = read_wav(o.input);
  const std::size_t span = o.lfo_length > 0 ? o.lfo_length : profile_length(o.common.profile);
  const ToyKind kind = toy_kind_from_string(o.toy.effect);
  const ToyConfig cfg = toy_config(o.toy, o.n, x.sample_rate, span);
  const fs::path out = dir / o.output;
  write_wav(out, {make_toy_target(kind, x.samples, cfg), x.sample_rate});
  man.add(out);
  man.extra("lfo_rate_hz", cfg.lfo_rate_hz);
  std::cout << "wrote " << out.string() << " (" << to_string(kind) << ", LFO "
            << format_double(cfg.lfo_rate_hz) << " Hz)\n";
  man.write();
  return kOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  Common common;
  std::string input;
  std::string target;
  std::string val_input;
  std::string val_target;
  std::string variant = "delay";
  std::string feedback = "i";
  std::size_t channels = 1;
  int sections = 6;
  std::size_t n = 1024;
  std::size_t nprime = 0;
  std::string emphasis = "none";
  std::size_t iterations = 0;
  double lr = 1e-3;
  std::size_t seed_count = 0;
  std::uint64_t first_seed = 0;
  std::size_t jobs = 1;
  bool no_align = false;
  CLI::Option* iterations_opt = nullptr;
  CLI::Option* seeds_opt = nullptr;
};

int run_train(const CLI::App& app, TrainOpts& o)
{
  const fs::path dir = prepare_out_dir(o.common.out);
  Manifest man("train", dir);
  man.config(app);

  TrainConfig cfg = profile_by_name(o.common.profile);
  cfg.variant = variant_from_string(o.variant);
  cfg.feedback = feedback_from_string(o.feedback);
  cfg.channels = o.channels;
  cfg.sections = o.sections;
  cfg.frame_length = o.n;
  cfg.kernel_length = o.nprime;
  cfg.emphasis = emphasis_from_string(o.emphasis);
  cfg.adam.learning_rate = o.lr;
  cfg.jobs = o.jobs;
  cfg.align = !o.no_align;
  if (given(o.iterations_opt)) {
    cfg.iterations = o.iterations;
  }
  std::size_t count = given(o.seeds_opt) ? o.seed_count : cfg.seeds.size();
  cfg.seeds.clear();
  for (std::size_t i = 0; i < count; ++i) {
    cfg.seeds.push_back(o.first_seed + i);
  }

  const Audio x = load_audio(o.input, cfg.sample_rate);
  const Audio y = load_audio(o.target, cfg.sample_rate);
  if (x.samples.size() != y.samples.size()) {
    throw DataError("train: input has " + std::to_string(x.samples.size()) + " samples, target has "
                    + std::to_string(y.samples.size()));
  }
  cfg.signal_length = x.samples.size();
  check_config(cfg);

  ExperimentData data;
  data.input.frame_length = cfg.frame_length;
  data.input.kernel_length = cfg.effective_kernel_length();
  data.input.frame_count = cfg.frame_count();
  data.input.frames = frame_signal(x.samples, cfg.frame_length);
  data.target = y.samples;
  if (o.val_input.empty() != o.val_target.empty()) {
    throw InvalidArgument("train: --val-input and --val-target go together");
  }
  if (o.val_input.empty()) {
    data.val_input = x.samples;
    data.val_target = y.samples;
  } else {
    data.val_input = load_audio(o.val_input, cfg.sample_rate).samples;
    data.val_target = load_audio(o.val_target, cfg.sample_rate).samples;
  }
  man.seeds(cfg.seeds);

  std::cout << "training " << cfg.seeds.size() << " seed(s), " << cfg.iterations
            << " iterations, M=" << cfg.frame_count() << " frames\n";
  const RunStats stats = multi_seed(cfg, data, [](const SeedOutcome& s) {
    if (s.ok) {
      std::cout << "  seed " << s.seed << ": loss " << format_double(s.result.final_loss)
                << ", ESR " << format_double(s.metrics.esr_db) << " dB\n";
    } else {
      std::cout << "  seed " << s.seed << " failed: " << s.error << "\n";
    }
  });

  for (const auto& s : stats.outcomes) {
    const fs::path sd = dir / ("seed_" + std::to_string(s.seed));
    fs::create_directories(sd);
    json res;
    res["seed"] = s.seed;
    res["ok"] = s.ok;
    if (s.ok) {
      const fs::path params = sd / "params.json";
      save_params(params, s.result.params);
      man.add(params);
      const fs::path hist = sd / "loss.csv";
      write_series(hist, "iteration", "loss", s.result.loss_history);
      man.add(hist);
      res["final_loss"] = s.result.final_loss;
      res["esr"] = s.metrics.esr;
      res["esr_db"] = s.metrics.esr_db;
      res["mrsl"] = s.metrics.mrsl;
      res["align_index"] = s.metrics.start_frame;
    } else {
      res["error"] = s.error;
    }
    const fs::path rp = sd / "result.json";
    write_text(rp, res.dump(2) + "\n");
    man.add(rp);
  }

  const fs::path stats_csv = dir / "stats.csv";
  {
    CsvWriter w(stats_csv, {"seed", "status", "final_loss", "esr_db", "mrsl", "align_index"});
    for (const auto& s : stats.outcomes) {
      w.cell(s.seed).cell(s.ok ? "ok" : "failed");
      if (s.ok) {
        w.cell(s.result.final_loss).cell(s.metrics.esr_db).cell(s.metrics.mrsl).cell(
            static_cast<std::uint64_t>(s.metrics.start_frame));
      } else {
        w.cell("").cell("").cell("").cell("");
      }
      w.end_row();
    }
    w.close();
  }
  man.add(stats_csv);

  const fs::path summary_csv = dir / "summary.csv";
  {
    CsvWriter w(summary_csv, {"succeeded", "failed", "median_esr_db", "best_esr_db", "best_seed",
                              "ci_half_width", "trivial_esr_db"});
    w.cell(static_cast<std::uint64_t>(stats.succeeded))
        .cell(static_cast<std::uint64_t>(stats.failed))
        .cell(stats.median_esr_db)
        .cell(stats.best_esr_db)
        .cell(stats.best_seed)
        .cell(stats.ci_half_width)
        .cell(stats.trivial_esr_db)
        .end_row();
    w.close();
  }
  man.add(summary_csv);

  std::cout << "median ESR " << format_double(stats.median_esr_db) << " dB, best "
            << format_double(stats.best_esr_db) << " dB (seed " << stats.best_seed << "), CI +/-"
            << format_double(stats.ci_half_width) << ", trivial " << format_double(stats.trivial_esr_db)
            << " dB, failed " << stats.failed << "\n";
  man.write();
  if (stats.succeeded == 0) {
    std::cerr << "modfx: every seed failed\n";
    return kNumeric;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// validate

struct ValidateOpts {
  Common common;
  std::string params;
  std::string input;
  std::string target;
  bool align = false;
  double rate_scale = 1.0;
};

int run_validate(const CLI::App& app, ValidateOpts& o)
{
  const fs::path dir = prepare_out_dir(o.common.out);
  Manifest man("validate", dir);
  man.config(app);
  const ModelParams p = load_params(o.params);
  const Audio x = load_audio(o.input, p.sample_rate);
  const Audio y = load_audio(o.target, p.sample_rate);
  if (x.samples.size() != y.samples.size()) {
    throw DataError("validate: input and target differ in length");
  }
  const ValidationMetrics m = validate(p, x.samples, y.samples, o.align, o.rate_scale);
  const double trivial = esr_db(y.samples, x.samples);
  std::cout << "ESR " << format_double(m.esr_db) << " dB\nMRSL " << format_double(m.mrsl)
            << "\nalign index " << m.start_frame << "\ntrivial ESR " << format_double(trivial)
            << " dB\n";
  json res = {{"esr", m.esr},     {"esr_db", m.esr_db},         {"mrsl", m.mrsl},
              {"align", o.align}, {"align_index", m.start_frame}, {"trivial_esr_db", trivial}};
  const fs::path path = dir / "metrics.json";
  write_text(path, res.dump(2) + "\n");
  man.add(path);
  man.write();
  return kOk;
}

// ---------------------------------------------------------------------------
// infer

struct InferOpts {
  Common common;
  std::string params;
  std::string input;
  std::string output = "output.wav";
  double rate_scale = 1.0;
  std::size_t start_frame = 0;
  bool linear_control = false;
  bool log_control = false;
};

int run_infer(const CLI::App& app, InferOpts& o)
{
  const fs::path dir = prepare_out_dir(o.common.out);
  Manifest man("infer", dir);
  man.config(app);
  const ModelParams p = load_params(o.params);
  const Audio x = load_audio(o.input, p.sample_rate);
  RenderOptions opts;
  opts.rate_scale = o.rate_scale;
  opts.start_frame = o.start_frame;
  opts.linear_control = o.linear_control;
  const auto y = process(p, x.samples, opts);
  const fs::path out = dir / o.output;
  write_wav(out, {y, p.sample_rate});
  man.add(out);
  if (o.log_control) {
    for (std::size_t c = 0; c < p.channels.size(); ++c) {
      const fs::path cp = dir / ("control_ch" + std::to_string(c) + ".csv");
      write_series(cp, "n", "control", render_channel_control(p.channels[c], p, x.samples.size(), opts));
      man.add(cp);
    }
  }
  std::cout << "wrote " << out.string() << "\n";
  man.write();
  return kOk;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOpts {
  Common common;
  std::string what;
  double delay = 100.0;
  std::size_t n = 256;
  std::string kernel = "tri";
  std::size_t nprime = 128;
  int sections = 4;
  double pole = 0.5;
  double d0 = 80.0;
  std::size_t steps = 5000;
  double lr = 1e-2;
  double step = 0.01;
};

HalfSpectrum analysis_spectrum(const AnalyzeOpts& o)
{
  if (o.kernel == "flat") {
    return tri_spectrum(1, o.n);
  }
  if (o.kernel == "tri") {
    return tri_spectrum(o.nprime, o.n);
  }
  if (o.kernel == "ap-chirp" || o.kernel == "lin-chirp") {
    const Kernel k = make_kernel(kernel_kind_from_string(o.kernel), o.nprime, o.n);
    return rfft(k.samples, o.n);
  }
  throw InvalidArgument("analyze: unknown kernel '" + o.kernel + "'");
}

int run_analyze(const CLI::App& app, AnalyzeOpts& o)
{
  const fs::path dir = prepare_out_dir(o.common.out);
  Manifest man("analyze " + o.what, dir);
  man.config(app);
  auto add_with_script = [&](const fs::path& csv) {
    man.add(csv);
    auto py = csv;
    py.replace_extension(".py");
    man.add(py);
  };
  if (o.what == "gamma") {
    std::vector<double> ks;
    for (std::size_t k = 0; k <= o.n / 2; ++k) {
      ks.push_back(static_cast<double>(k));
    }
    std::vector<double> ds;
    for (double d = 0.0; d <= static_cast<double>(o.n); d += 0.5) {
      ds.push_back(d);
    }
    const fs::path path = dir / "gamma_surface.csv";
    export_gamma(gamma_surface(o.delay, o.n, ks, ds), path);
    add_with_script(path);
  } else if (o.what == "delay-surface") {
    const HalfSpectrum x = analysis_spectrum(o);
    std::vector<double> grid;
    for (double d = 0.0; d <= static_cast<double>(o.n); d += o.step) {
      grid.push_back(d);
    }
    const fs::path path = dir / "delay_surface.csv";
    export_surface(delay_loss_surface(o.delay, x, grid), path);
    add_with_script(path);
    const double basin = basin_half_width(o.delay, x);
    man.extra("basin_half_width", basin);
    std::cout << "gradient basin half-width " << format_double(basin) << " samples\n";
  } else if (o.what == "apf-surface") {
    const HalfSpectrum x = analysis_spectrum(o);
    std::vector<double> grid;
    for (int i = -999; i <= 999; ++i) {
      grid.push_back(i / 1000.0);
    }
    const fs::path path = dir / "apf_surface.csv";
    export_surface(apf_loss_surface(o.pole, o.sections, x, grid), path);
    add_with_script(path);
  } else if (o.what == "descend") {
    const HalfSpectrum x = analysis_spectrum(o);
    const DescentResult r = descend_delay(o.d0, o.delay, x, o.steps, o.lr);
    const fs::path path = dir / "descent.csv";
    write_series(path, "step", "Dhat", r.trajectory);
    man.add(path);
    man.extra("final_delay", r.trajectory.back());
    man.extra("final_loss", r.final_loss);
    std::cout << "final Dhat " << format_double(r.trajectory.back()) << " (target "
              << format_double(o.delay) << "), loss " << format_double(r.final_loss) << "\n";
  } else {
    throw InvalidArgument("analyze: unknown analysis '" + o.what + "'");
  }
  man.write();
  return kOk;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Differentiable modulation-effect modelling toolkit"};
  app.set_version_flag("--version", kVersion);
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file; a [command] section holds defaults for its flags");
  app.fallthrough();

  GenOpts gen;
  auto* g = app.add_subcommand("gen", "Generate kernels, framed training input and test signals");
  add_common(g, gen.common);
  g->add_option("--kind", gen.kind, "tri, lin-chirp, ap-chirp or guitar")
      ->check(CLI::IsMember({"tri", "lin-chirp", "ap-chirp", "guitar"}));
  g->add_option("--N", gen.n, "Frame length N (power of two)");
  g->add_option("--Nprime", gen.nprime, "Kernel length N' (default N/2)");
  g->add_option("--L", gen.length, "Signal length in samples (default from profile)");
  g->add_option("--sample-rate", gen.fs, "Sample rate (Hz)");
  g->add_option("--toy", gen.toy, "Also render a toy target: flanger or phaser");
  g->add_option("--seed", gen.seed, "Seed for the guitar signal");
  add_toy_options(g, gen.toy_opts);

  MakeTargetOpts mt;
  auto* t = app.add_subcommand("make-target", "Render a digital flanger/phaser reference output");
  add_common(t, mt.common);
  t->add_option("--effect", mt.toy.effect, "flanger or phaser")->required();
  t->add_option("--input", mt.input, "Input WAV")->required();
  t->add_option("--output", mt.output, "Output WAV name inside --out");
  t->add_option("--N", mt.n, "Frame length bounding the delay range");
  t->add_option("--lfo-span", mt.lfo_length,
                "Samples covered by two LFO periods when --lfo-rate is 0 (default profile L)");
  add_toy_options(t, mt.toy);

  TrainOpts tr;
  auto* r = app.add_subcommand("train", "Train models over several seeds and validate them");
  add_common(r, tr.common);
  r->add_option("--input", tr.input, "Framed training input WAV")->required();
  r->add_option("--target", tr.target, "Target WAV")->required();
  r->add_option("--val-input", tr.val_input, "Validation input WAV (default: training input)");
  r->add_option("--val-target", tr.val_target, "Validation target WAV");
  r->add_option("--variant", tr.variant, "delay (flanger/chorus) or apf (phaser)")
      ->check(CLI::IsMember({"delay", "apf", "flanger", "chorus", "phaser"}));
  r->add_option("--feedback", tr.feedback, "Feedback configuration i or ii")
      ->check(CLI::IsMember({"i", "ii"}));
  r->add_option("--C", tr.channels, "Parallel channels");
  r->add_option("--K", tr.sections, "All-pass sections");
  r->add_option("--N", tr.n, "Frame length N");
  r->add_option("--Nprime", tr.nprime, "Kernel length N' (default N/2)");
  r->add_option("--emphasis", tr.emphasis, "Loss pre-emphasis: none or tri")
      ->check(CLI::IsMember({"none", "tri"}));
  tr.iterations_opt = r->add_option("--iterations", tr.iterations, "Adam iterations");
  r->add_option("--lr", tr.lr, "Learning rate");
  tr.seeds_opt = r->add_option("--seeds", tr.seed_count, "Number of seeds");
  r->add_option("--first-seed", tr.first_seed, "First seed value");
  r->add_option("--jobs", tr.jobs, "Concurrent seeds")->check(CLI::PositiveNumber);
  r->add_flag("--no-align", tr.no_align, "Skip the LFO start-index search in validation");

  ValidateOpts va;
  auto* v = app.add_subcommand("validate", "Time-domain ESR/MRSL of a params file");
  add_common(v, va.common);
  v->add_option("--params", va.params, "Params JSON")->required();
  v->add_option("--input", va.input, "Input WAV")->required();
  v->add_option("--target", va.target, "Target WAV")->required();
  v->add_flag("--align", va.align, "Search the LFO start index");
  v->add_option("--rate-scale", va.rate_scale, "LFO rate multiplier")->check(CLI::PositiveNumber);

  InferOpts in;
  auto* i = app.add_subcommand("infer", "Render audio through a trained model");
  add_common(i, in.common);
  i->add_option("--params", in.params, "Params JSON")->required();
  i->add_option("--input", in.input, "Input WAV")->required();
  i->add_option("--output", in.output, "Output WAV name inside --out");
  i->add_option("--rate-scale", in.rate_scale, "LFO rate multiplier")->check(CLI::PositiveNumber);
  i->add_option("--start-frame", in.start_frame, "LFO start index");
  i->add_flag("--linear-control", in.linear_control, "Interpolate the frame-rate control linearly");
  i->add_flag("--log-control", in.log_control, "Write the per-sample control signal as CSV");

  AnalyzeOpts an;
  auto* a = app.add_subcommand("analyze", "Loss-surface studies");
  add_common(a, an.common);
  a->add_option("what", an.what, "gamma, delay-surface, apf-surface or descend")
      ->required()
      ->check(CLI::IsMember({"gamma", "delay-surface", "apf-surface", "descend"}));
  a->add_option("--D", an.delay, "Target delay (samples)");
  a->add_option("--N", an.n, "DFT length");
  a->add_option("--kernel", an.kernel, "flat, tri, ap-chirp or lin-chirp");
  a->add_option("--Nprime", an.nprime, "Kernel length");
  a->add_option("--K", an.sections, "All-pass sections");
  a->add_option("--p", an.pole, "Target pole");
  a->add_option("--D0", an.d0, "Initial delay for descent");
  a->add_option("--steps", an.steps, "Descent steps");
  a->add_option("--lr", an.lr, "Descent learning rate");
  a->add_option("--step", an.step, "Delay grid spacing for surfaces");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) {
      return run_gen(*g, gen);
    }
    if (*t) {
      return run_make_target(*t, mt);
    }
    if (*r) {
      return run_train(*r, tr);
    }
    if (*v) {
      return run_validate(*v, va);
    }
    if (*i) {
      return run_infer(*i, in);
    }
    return run_analyze(*a, an);
  } catch (const InvalidArgument& e) {
    std::cerr << "modfx: usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "modfx: numeric abort: " << e.what() << "\n";
    return kNumeric;
  } catch (const DataError& e) {
    std::cerr << "modfx: data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "modfx: data error: " << e.what() << "\n";
    return kData;
  }
}
