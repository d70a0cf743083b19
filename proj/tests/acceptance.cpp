// Acceptance checks. Usage: acceptance <criterion 1..11>. Prints one line
// "criterion N: PASS|FAIL <detail>" and exits 0 on pass, 1 on fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "modfx/analysis.hpp"
#include "modfx/csv.hpp"
#include "modfx/error.hpp"
#include "modfx/grad.hpp"
#include "modfx/params_io.hpp"
#include "modfx/rng.hpp"
#include "modfx/signals.hpp"
#include "modfx/tdengine.hpp"
#include "modfx/toy.hpp"
#include "modfx/trainer.hpp"
#include "modfx/wav.hpp"
#include "oracles.hpp"

using namespace modfx;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4)
{
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_cli(const std::string& args, const fs::path& log)
{
  const std::string cmd = std::string(MODFX_CLI_PATH) + " " + args + " >> " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void require_cli(const std::string& args, const fs::path& log)
{
  const int code = run_cli(args, log);
  if (code != 0) {
    throw DataError("modfx " + args.substr(0, args.find(' ')) + " exited with " + std::to_string(code)
                    + " (see " + log.string() + ")");
  }
}

fs::path work_root()
{
  const fs::path p = fs::path(MODFX_ACCEPT_DIR);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------

Verdict gradient_correctness()
{
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = 32;
  const std::size_t m = 3;
  std::size_t draws = 0;
  std::size_t checked = 0;
  std::size_t tight = 0;
  std::size_t failures = 0;
  double worst = 0.0;
  Rng rng(2024);
  for (int draw = 0; draw < 200; ++draw) {
    ModelShape s;
    s.variant = draw % 2 == 0 ? Variant::DelayLine : Variant::ApfCascade;
    s.feedback = (draw / 2) % 2 == 0 ? FeedbackConfig::I : FeedbackConfig::II;
    s.sections = 1 + draw % 4;
    s.frame_length = n;
    s.frame_count = m;
    auto p = init_params(static_cast<std::uint64_t>(draw), s);
    auto& ch = p.channels[0];
    ch.comb = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-0.6, 0.6)};
    for (auto* svf : {&ch.svf1, &ch.svf2}) {
      svf->f_raw = rng.normal(0.0, 1.0);
      svf->r_raw = rng.normal(0.0, 1.0);
      svf->m_low = rng.uniform(-2.0, 2.0);
      svf->m_band = rng.uniform(-2.0, 2.0);
      svf->m_high = rng.uniform(-2.0, 2.0);
    }
    for (auto& v : ch.lfo.b1) {
      v = rng.normal(0.0, 0.5);
    }
    ch.lfo.b2 = rng.normal(0.0, 0.3);
    SpectralBatch b;
    for (std::size_t i = 0; i < m; ++i) {
      b.inputs.push_back(rfft(oracle::noise(n, 1000 * static_cast<std::uint64_t>(draw) + i)));
      b.targets.push_back(rfft(oracle::noise(n, 5000000 + 1000 * static_cast<std::uint64_t>(draw) + i)));
    }
    const auto report = check_gradients(p, b, 1e-3);
    ++draws;
    failures += report.failures;
    worst = std::max(worst, report.max_rel_error);
    for (const auto& e : report.entries) {
      if (e.checked) {
        ++checked;
        tight += e.rel_error < 1e-5 ? 1 : 0;
      }
    }
  }
  const double frac = static_cast<double>(tight) / static_cast<double>(checked);
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = draws >= 200 && failures == 0 && frac >= 0.9 && secs < 120.0;
  v.detail = std::to_string(draws) + " draws, " + std::to_string(checked) + " gradients, max rel err "
             + fmt(worst) + ", " + fmt(100.0 * frac) + "% below 1e-5, " + fmt(secs, 3) + " s";
  return v;
}

Verdict analytic_gradient()
{
  // Exact derivative written from the complex form
  // L = sum |X|^2 Re(1 - e^{j w (Dhat - D)}), dL/dDhat = sum |X|^2 Re(-j w e^{j w (Dhat - D)}).
  const std::size_t n = 256;
  const double d = 100.0;
  const auto x = tri_spectrum(64, n);
  double worst = 0.0;
  double worst_fd = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double dh = static_cast<double>(n) * i / 999.0;
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double w = 2.0 * oracle::kPi * static_cast<double>(k) / static_cast<double>(n);
      acc += std::norm(x[k]) * (std::complex<double>(0.0, -w) * std::polar(1.0, w * (dh - d)));
    }
    const double ref = acc.real();
    const double g = delay_loss(dh, d, x).gradient;
    worst = std::max(worst, std::abs(g - ref) / std::max(1.0, std::abs(ref)));
    const double h = 1e-4;
    const double fd = (delay_loss(dh + h, d, x).value - delay_loss(dh - h, d, x).value) / (2.0 * h);
    worst_fd = std::max(worst_fd, std::abs(g - fd) / std::max(1.0, std::abs(fd)));
  }
  Verdict v;
  v.pass = worst < 1e-8 && worst_fd < 1e-5;
  v.detail = "1000-point grid, max rel err " + fmt(worst) + " (finite-difference cross-check " + fmt(worst_fd)
             + "); every term carries the chain factor 2 pi k / N";
  return v;
}

Verdict basin_widths()
{
  const std::size_t n = 256;
  const double d = 100.0;
  Verdict v;
  v.pass = true;
  for (std::size_t np : {1u, 32u, 64u, 128u}) {
    const double w = basin_half_width(d, tri_spectrum(np, n));
    bool ok;
    if (np == 1) {
      ok = w <= 1.5;
      v.detail += "N'=1: " + fmt(w) + " (<= 1.5)";
    } else {
      const double want = static_cast<double>(np) / 2.0;
      ok = std::abs(w - want) <= 0.25 * want;
      v.detail += "; N'=" + std::to_string(np) + ": " + fmt(w) + " (want " + fmt(want) + " +-25%)";
    }
    v.pass = v.pass && ok;
  }
  return v;
}

Verdict descent_dichotomy()
{
  const std::size_t n = 256;
  const auto flat = descend_delay(80.0, 100.0, tri_spectrum(1, n));
  const auto tri = descend_delay(80.0, 100.0, tri_spectrum(64, n));
  const double ef = std::abs(flat.trajectory.back() - 100.0);
  const double et = std::abs(tri.trajectory.back() - 100.0);
  Verdict v;
  v.pass = ef > 1.0 && et < 0.1;
  v.detail = "flat |err| " + fmt(ef) + " (> 1), Tri N'=64 |err| " + fmt(et) + " (< 0.1)";
  return v;
}

Verdict parseval()
{
  const std::size_t n = 512;
  const std::size_t m = 16;
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    const auto fir = oracle::noise(n / 2, 10 * trial + 1);
    const auto guess = oracle::noise(n / 2, 10 * trial + 2);
    std::vector<double> x(n * m, 0.0);
    std::vector<double> y(n * m, 0.0);
    std::vector<double> yh(n * m, 0.0);
    for (std::size_t f = 0; f < m; ++f) {
      const auto k = oracle::noise(n / 2, 1000 * trial + f);
      std::copy(k.begin(), k.end(), x.begin() + static_cast<long>(f * n));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i && j < n / 2; ++j) {
          y[f * n + i] += fir[j] * x[f * n + i - j];
          yh[f * n + i] += guess[j] * x[f * n + i - j];
        }
      }
    }
    const auto ys = frame_spectra(frame_signal(y, n));
    const auto yhs = frame_spectra(frame_signal(yh, n));
    worst = std::max(worst, std::abs(spectral_loss(yhs, ys) - esr(y, yh)));
  }
  Verdict v;
  v.pass = worst < 1e-6;
  v.detail = "5 random FIR targets, max |spectral loss - ESR| " + fmt(worst);
  return v;
}

Verdict fs_td_consistency()
{
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = 512;
  const std::size_t frames = 8;
  double worst = 0.0;
  int cases = 0;
  for (auto variant : {Variant::DelayLine, Variant::ApfCascade}) {
    for (int k : {1, 4, 6}) {
      for (auto f : {FeedbackConfig::I, FeedbackConfig::II}) {
        ChannelParams ch;
        ch.variant = variant;
        ch.sections = k;
        ch.feedback = f;
        ch.comb = {0.9, 0.7, -0.45};
        ch.svf1 = {-0.8, 0.2, 1.0, 0.4, 0.7};
        ch.bypass_svf2 = true;
        // Integer delays keep the interpolating read exact.
        const double c = variant == Variant::DelayLine ? control_from_delay(4.0 + 3.0 * k, n) : -0.25;
        ch.lfo.lut.assign(frames, 0.0);
        ch.lfo.b2 = c;
        std::vector<double> x(n * frames, 0.0);
        for (std::size_t m = 0; m < frames; ++m) {
          const auto burst = oracle::noise(n / 2, 77 + m);
          std::copy(burst.begin(), burst.end(), x.begin() + static_cast<long>(m * n));
        }
        const std::vector<double> ctl(x.size(), c);
        const auto y = variant == Variant::DelayLine ? process_flanger(ch, ctl, x, n) : process_phaser(ch, ctl, x, n);
        ModelParams p;
        p.frame_length = n;
        p.frame_count = frames;
        p.channels = {ch};
        const auto fsy = fs_forward(p, frame_spectra(frame_signal(x, n)));
        for (std::size_t m = 0; m < frames; ++m) {
          const auto ym = irfft(fsy[m]);
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double e = ym[i] - y[m * n + i];
            s += e * e;
          }
          worst = std::max(worst, std::sqrt(s / static_cast<double>(n)));
        }
        ++cases;
      }
    }
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = worst < 1e-5 && secs < 60.0;
  v.detail = std::to_string(cases) + " configurations, max per-frame RMS diff " + fmt(worst) + ", "
             + fmt(secs, 3) + " s";
  return v;
}

Verdict stability()
{
  Rng rng(99);
  std::size_t violations = 0;
  const std::size_t n = 1024;
  for (int i = 0; i < 10000; ++i) {
    SVFParams s{rng.normal(0.0, 10.0), rng.normal(0.0, 10.0), rng.normal(0.0, 3.0), rng.normal(0.0, 3.0),
                rng.normal(0.0, 3.0)};
    const double f = svf_frequency(s.f_raw);
    const double r = svf_resonance(s.r_raw);
    const double c = rng.normal(0.0, 5.0);
    const double p = pole_from_control(c);
    const double d = delay_from_control(c, n);
    bool ok = f > 0.0 && f < 0.5 && r > 0.0 && std::abs(p) < 1.0 && d >= 0.0 && d <= n / 2.0;
    // The realised biquad has both poles inside the unit circle.
    const auto q = svf_coefficients(s);
    // Cancellation-free roots: the larger from the quadratic formula, the
    // other from the product a2 / a0.
    const std::complex<double> disc = std::sqrt(std::complex<double>(q.a1 * q.a1 - 4.0 * q.a0 * q.a2));
    const std::complex<double> big = (-q.a1 - (q.a1 >= 0.0 ? 1.0 : -1.0) * disc) / (2.0 * q.a0);
    const std::complex<double> small = std::abs(big) > 0.0 ? (q.a2 / q.a0) / big : 0.0;
    ok = ok && std::abs(big) < 1.0 && std::abs(small) < 1.0;
    violations += ok ? 0 : 1;
  }
  Verdict v;
  v.pass = violations == 0;
  v.detail = "10000 draws, " + std::to_string(violations) + " violations of f in (0,0.5), R > 0, |p| < 1, "
             "d in [0,N/2], biquad poles inside the unit circle";
  return v;
}

// ---------------------------------------------------------------------------
// End-to-end toy recovery through the command-line pipeline.

struct ToySpec {
  std::string effect;   // flanger or phaser
  std::string kernel;   // training input kind
  std::string variant;  // model variant
  std::string emphasis; // loss pre-emphasis
};

const ToySpec kFlanger{"flanger", "tri", "delay", "none"};
const ToySpec kPhaser{"phaser", "ap-chirp", "apf", "tri"};

void prepare_toy_data(const ToySpec& t, const fs::path& dir)
{
  const fs::path log = dir / "pipeline.log";
  if (fs::exists(dir / "data" / "target.wav") && fs::exists(dir / "val" / "target.wav")) {
    return;
  }
  fs::create_directories(dir);
  require_cli("gen --profile desk --kind " + t.kernel + " --N 1024 --toy " + t.effect + " --out "
                  + (dir / "data").string(),
              log);
  require_cli("gen --profile desk --kind guitar --seed 1 --out " + (dir / "val").string(), log);
  require_cli("make-target --profile desk --effect " + t.effect + " --N 1024 --input "
                  + (dir / "val" / "guitar.wav").string() + " --out " + (dir / "val").string(),
              log);
}

void train_toy(const ToySpec& t, const fs::path& dir, const std::string& run)
{
  require_cli("train --profile desk --input " + (dir / "data" / "input.wav").string() + " --target "
                  + (dir / "data" / "target.wav").string() + " --val-input "
                  + (dir / "val" / "guitar.wav").string() + " --val-target "
                  + (dir / "val" / "target.wav").string() + " --variant " + t.variant
                  + " --K 6 --N 1024 --emphasis " + t.emphasis + " --out " + (dir / run).string(),
              dir / "pipeline.log");
}

Verdict toy_recovery(const ToySpec& t)
{
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = work_root() / ("toy_" + t.effect);
  fs::remove_all(dir);
  prepare_toy_data(t, dir);
  train_toy(t, dir, "run");

  const auto summary = read_csv(dir / "run" / "summary.csv");
  const double best = summary.numbers("best_esr_db").at(0);
  const double trivial = summary.numbers("trivial_esr_db").at(0);
  const double median_db = summary.numbers("median_esr_db").at(0);
  const auto best_seed = static_cast<std::uint64_t>(summary.numbers("best_seed").at(0));

  const auto params = load_params(dir / "run" / ("seed_" + std::to_string(best_seed)) / "params.json");
  const auto c = control_series(params.channels[0].lfo);
  std::vector<double> learned(c.size());
  for (std::size_t m = 0; m < c.size(); ++m) {
    learned[m] = t.effect == "flanger" ? delay_from_control(c[m], params.frame_length) : pole_from_control(c[m]);
  }
  // The model is trained on the target's own time axis, so frame m of the
  // learned trajectory is aligned with frame m of the target modulation.
  const auto target = read_csv(dir / "data" / "target_modulation.csv")
                          .numbers(t.effect == "flanger" ? "delay" : "pole");
  const double r = oracle::pearson(learned, target);

  std::string per_seed;
  const auto stats = read_csv(dir / "run" / "stats.csv");
  const auto seeds = stats.numbers("seed");
  for (std::size_t i = 0; i < stats.rows.size(); ++i) {
    const auto& row = stats.rows[i];
    per_seed += " " + row[0] + ":" + (row[1] == "ok" ? fmt(parse_double(row[3], "esr_db")) : row[1]);
  }
  Verdict v;
  v.pass = best <= trivial - 10.0 && r >= 0.95;
  v.detail = "best ESR " + fmt(best) + " dB (seed " + std::to_string(best_seed) + "), trivial " + fmt(trivial)
             + " dB, median " + fmt(median_db) + " dB, trajectory correlation " + fmt(r) + ", seeds ESR dB:"
             + per_seed + ", " + fmt(seconds_since(t0) / 60.0, 3) + " min";
  return v;
}

Verdict external_wav_pipeline()
{
  // A WAV pair written outside the toolkit (16-bit PCM) runs through
  // train, validate and infer.
  const fs::path dir = work_root() / "external";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::size_t n = 256;
  const std::size_t length = n * 32;
  ToyConfig tc;
  tc.frame_length = n;
  tc.delay_hi_ms = 2.0;
  tc.lfo_rate_hz = lfo_rate_for_periods(2.0, length, tc.sample_rate);
  const auto x = karplus_strong(length, tc.sample_rate, 4);
  const auto y = make_toy_target(ToyKind::Flanger, x, tc);
  auto write_pcm16 = [](const fs::path& p, const std::vector<double>& s) {
    std::ofstream o(p, std::ios::binary);
    auto u32 = [&](std::uint32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](std::uint16_t v) { o.write(reinterpret_cast<const char*>(&v), 2); };
    const auto bytes = static_cast<std::uint32_t>(2 * s.size());
    o.write("RIFF", 4);
    u32(36 + bytes);
    o.write("WAVEfmt ", 8);
    u32(16);
    u16(1);
    u16(1);
    u32(44100);
    u32(88200);
    u16(2);
    u16(16);
    o.write("data", 4);
    u32(bytes);
    for (double v : s) {
      const auto q = static_cast<std::int16_t>(std::lround(std::clamp(v * 0.25, -1.0, 1.0) * 32767.0));
      o.write(reinterpret_cast<const char*>(&q), 2);
    }
  };
  write_pcm16(dir / "in.wav", x);
  write_pcm16(dir / "out.wav", y);
  const fs::path log = dir / "pipeline.log";
  const std::string pair = " --input " + (dir / "in.wav").string() + " --target " + (dir / "out.wav").string();
  Verdict v;
  try {
    require_cli("train --profile desk --variant delay --N 256 --iterations 50 --seeds 2" + pair + " --out "
                    + (dir / "run").string(),
                log);
    const fs::path params = dir / "run" / "seed_0" / "params.json";
    require_cli("validate --align --params " + params.string() + pair + " --out " + (dir / "val").string(), log);
    require_cli("infer --params " + params.string() + " --input " + (dir / "in.wav").string() + " --out "
                    + (dir / "inf").string(),
                log);
    const auto out = read_wav(dir / "inf" / "output.wav");
    v.pass = out.samples.size() == length && std::all_of(out.samples.begin(), out.samples.end(),
                                                         [](double s) { return std::isfinite(s); });
    v.detail = "16-bit WAV pair through train, validate and infer; toy recovery itself is criteria 6-8";
  } catch (const std::exception& e) {
    v.detail = e.what();
  }
  return v;
}

Verdict determinism()
{
  const fs::path dir = work_root() / "toy_flanger";
  prepare_toy_data(kFlanger, dir);
  if (!fs::exists(dir / "run" / "stats.csv")) {
    train_toy(kFlanger, dir, "run");
  }
  fs::remove_all(dir / "rerun");
  train_toy(kFlanger, dir, "rerun");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const auto a = slurp(dir / "run" / "stats.csv");
  const auto b = slurp(dir / "rerun" / "stats.csv");
  Verdict v;
  v.pass = !a.empty() && a == b && slurp(dir / "run" / "summary.csv") == slurp(dir / "rerun" / "summary.csv");
  v.detail = "stats.csv " + std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")
             + " across two runs";
  return v;
}

} // namespace

int main(int argc, char** argv)
{
  const std::map<int, std::function<Verdict()>> criteria = {
      {1, gradient_correctness},
      {2, analytic_gradient},
      {3, basin_widths},
      {4, descent_dichotomy},
      {5, parseval},
      {6, fs_td_consistency},
      {7, [] { return toy_recovery(kFlanger); }},
      {8, [] { return toy_recovery(kPhaser); }},
      {9, stability},
      {10, external_wav_pipeline},
      {11, determinism},
  };
  if (argc != 2) {
    std::cerr << "usage: acceptance <criterion 1..11>\n";
    return 2;
  }
  const int id = std::atoi(argv[1]);
  const auto it = criteria.find(id);
  if (it == criteria.end()) {
    std::cerr << "unknown criterion " << argv[1] << "\n";
    return 2;
  }
  Verdict v;
  try {
    v = it->second();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("error: ") + e.what();
  }
  std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << " " << v.detail << std::endl;
  return v.pass ? 0 : 1;
}
