#include "modfx/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "modfx/csv.hpp"
#include "modfx/error.hpp"
#include "modfx/signals.hpp"

namespace modfx {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t dft_length_of(const HalfSpectrum& x)
{
  if (x.size() < 2) {
    throw InvalidArgument("analysis: spectrum needs at least two bins");
  }
  return 2 * (x.size() - 1);
}

double curvature_at_optimum(const HalfSpectrum& x)
{
  const double n = static_cast<double>(dft_length_of(x));
  double c = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double w = kTwoPi * static_cast<double>(k) / n;
    c += std::norm(x[k]) * w * w;
  }
  return c;
}

double second_derivative(double dhat, double delay, const HalfSpectrum& x)
{
  const double n = static_cast<double>(dft_length_of(x));
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double w = kTwoPi * static_cast<double>(k) / n;
    acc += std::norm(x[k]) * w * w * std::cos(w * (dhat - delay));
  }
  return acc;
}

void write_plot_script(const std::filesystem::path& csv, const std::string& body)
{
  auto script = csv;
  script.replace_extension(".py");
  std::ofstream out(script, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot open '" + script.string() + "' for writing");
  }
  out << "import csv\nimport sys\nimport matplotlib.pyplot as plt\n\n"
      << "path = sys.argv[1] if len(sys.argv) > 1 else '" << csv.filename().string() << "'\n"
      << "with open(path) as f:\n    rows = list(csv.DictReader(f))\n"
      << body;
  if (!out) {
    throw DataError("failed writing '" + script.string() + "'");
  }
}

} // namespace

double gamma_value(double dhat, double delay, double k, std::size_t dft_length)
{
  return 1.0 - std::cos(kTwoPi * k * (dhat - delay) / static_cast<double>(dft_length));
}

GammaSurface gamma_surface(double delay, std::size_t dft_length, std::span<const double> k_values,
                           std::span<const double> dhat_values)
{
  if (dft_length == 0) {
    throw InvalidArgument("gamma_surface: N must be positive");
  }
  GammaSurface s;
  s.k.assign(k_values.begin(), k_values.end());
  s.dhat.assign(dhat_values.begin(), dhat_values.end());
  s.gamma.reserve(s.k.size() * s.dhat.size());
  for (double k : s.k) {
    for (double d : s.dhat) {
      s.gamma.push_back(gamma_value(d, delay, k, dft_length));
    }
  }
  return s;
}

HalfSpectrum tri_spectrum(std::size_t kernel_length, std::size_t dft_length)
{
  if (kernel_length == 1) {
    const std::vector<double> impulse{1.0};
    return rfft(impulse, dft_length);
  }
  return rfft(gen_triangular(kernel_length).samples, dft_length);
}

DelayLoss delay_loss(double dhat, double delay, const HalfSpectrum& x)
{
  const double n = static_cast<double>(dft_length_of(x));
  DelayLoss r;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double w = kTwoPi * static_cast<double>(k) / n;
    const double p = std::norm(x[k]);
    const double arg = w * (dhat - delay);
    r.value += p * (1.0 - std::cos(arg));
    r.gradient += p * w * std::sin(arg);
  }
  return r;
}

LossSurface delay_loss_surface(double delay, const HalfSpectrum& x,
                               std::span<const double> dhat_grid)
{
  LossSurface s;
  s.param = "Dhat";
  s.grid.assign(dhat_grid.begin(), dhat_grid.end());
  s.values.reserve(s.grid.size());
  for (double d : s.grid) {
    s.values.push_back(delay_loss(d, delay, x).value);
  }
  return s;
}

double apf_loss(double pole, double phat, int sections, const HalfSpectrum& x)
{
  const FreqGrid grid(dft_length_of(x));
  const HalfSpectrum a = apf_cascade_response(pole, sections, grid);
  const HalfSpectrum b = apf_cascade_response(phat, sections, grid);
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    acc += std::norm(x[k]) * std::norm(a[k] - b[k]);
  }
  return acc;
}

LossSurface apf_loss_surface(double pole, int sections, const HalfSpectrum& x,
                             std::span<const double> phat_grid)
{
  for (double p : phat_grid) {
    if (!(std::abs(p) < 1.0)) {
      throw InvalidArgument("apf_loss_surface: every candidate pole needs |p| < 1");
    }
  }
  std::vector<std::size_t> order(phat_grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return phat_grid[a] > phat_grid[b]; });
  LossSurface s;
  s.param = "one_minus_p";
  for (std::size_t i : order) {
    s.grid.push_back(1.0 - phat_grid[i]);
    s.values.push_back(apf_loss(pole, phat_grid[i], sections, x));
  }
  return s;
}

DescentResult descend_delay(double d0, double delay, const HalfSpectrum& x, std::size_t steps,
                            double learning_rate)
{
  const double c = curvature_at_optimum(x);
  if (!(c > 0.0)) {
    throw DegenerateError("descend_delay: input has no energy above DC");
  }
  DescentResult r;
  r.trajectory.reserve(steps + 1);
  double d = d0;
  for (std::size_t i = 0; i < steps; ++i) {
    r.trajectory.push_back(d);
    d -= learning_rate * delay_loss(d, delay, x).gradient / c;
  }
  r.trajectory.push_back(d);
  r.final_loss = delay_loss(d, delay, x).value;
  return r;
}

double basin_half_width(double delay, const HalfSpectrum& x, double resolution, double limit)
{
  if (!(resolution > 0.0)) {
    throw InvalidArgument("basin_half_width: resolution must be positive");
  }
  if (!(limit > 0.0)) {
    limit = 0.5 * static_cast<double>(dft_length_of(x));
  }
  double last = 0.0;
  for (std::size_t i = 1; static_cast<double>(i) * resolution <= limit; ++i) {
    const double r = static_cast<double>(i) * resolution;
    const double gp = delay_loss(delay + r, delay, x).gradient;
    const double gm = delay_loss(delay - r, delay, x).gradient;
    if (!(gp > 0.0) || !(gm < 0.0)) {
      break;
    }
    last = r;
  }
  return last;
}

double convex_half_width(double delay, const HalfSpectrum& x, double resolution)
{
  const double limit = 0.5 * static_cast<double>(dft_length_of(x));
  double last = 0.0;
  for (std::size_t i = 1; static_cast<double>(i) * resolution <= limit; ++i) {
    const double r = static_cast<double>(i) * resolution;
    if (!(second_derivative(delay + r, delay, x) > 0.0)
        || !(second_derivative(delay - r, delay, x) > 0.0)) {
      break;
    }
    last = r;
  }
  return last;
}

void export_surface(const LossSurface& s, const std::filesystem::path& path)
{
  if (s.grid.empty()) {
    throw InvalidArgument("export_surface: empty grid");
  }
  if (s.grid.size() != s.values.size()) {
    throw InvalidArgument("export_surface: grid and values differ in length");
  }
  CsvWriter w(path, {"param", "loss"});
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    w.cell(s.grid[i]).cell(s.values[i]).end_row();
  }
  w.close();
  write_plot_script(path, "x = [float(r['param']) for r in rows]\n"
                          "y = [float(r['loss']) for r in rows]\n"
                          "plt.plot(x, y)\nplt.xlabel('" + (s.param.empty() ? std::string("param") : s.param)
                          + "')\nplt.ylabel('loss')\nplt.show()\n");
}

void export_gamma(const GammaSurface& s, const std::filesystem::path& path)
{
  if (s.k.empty() || s.dhat.empty()) {
    throw InvalidArgument("export_gamma: empty grid");
  }
  CsvWriter w(path, {"k", "Dhat", "gamma"});
  for (std::size_t i = 0; i < s.k.size(); ++i) {
    for (std::size_t j = 0; j < s.dhat.size(); ++j) {
      w.cell(s.k[i]).cell(s.dhat[j]).cell(s.at(i, j)).end_row();
    }
  }
  w.close();
  write_plot_script(path,
                    "ks = sorted({float(r['k']) for r in rows})\n"
                    "ds = sorted({float(r['Dhat']) for r in rows})\n"
                    "z = [[0.0] * len(ds) for _ in ks]\n"
                    "ki = {k: i for i, k in enumerate(ks)}\n"
                    "di = {d: j for j, d in enumerate(ds)}\n"
                    "for r in rows:\n"
                    "    z[ki[float(r['k'])]][di[float(r['Dhat'])]] = float(r['gamma'])\n"
                    "plt.pcolormesh(ds, ks, z, shading='auto')\n"
                    "plt.xlabel('Dhat')\nplt.ylabel('k')\nplt.colorbar()\nplt.show()\n");
}

LossSurface read_surface(const std::filesystem::path& path)
{
  const CsvTable t = read_csv(path);
  LossSurface s;
  s.param = "param";
  s.grid = t.numbers("param");
  s.values = t.numbers("loss");
  return s;
}

} // namespace modfx
