#include "modfx/grad.hpp"

#include <algorithm>
#include <cmath>

#include "modfx/error.hpp"

namespace modfx {

namespace {

void check_batch(const ModelParams& params, const SpectralBatch& batch)
{
  if (batch.size() == 0) {
    throw DegenerateError("grad_of_loss: empty batch");
  }
  if (batch.targets.size() != batch.inputs.size()
      || (!batch.frame_index.empty() && batch.frame_index.size() != batch.inputs.size())) {
    throw InvalidArgument("grad_of_loss: batch inputs/targets/frame_index differ in length");
  }
  const std::size_t bins = params.frame_length / 2 + 1;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.inputs[i].size() != bins || batch.targets[i].size() != bins) {
      throw InvalidArgument("grad_of_loss: spectrum length does not match N/2+1");
    }
    for (const auto& ch : params.channels) {
      if (batch.lut_index(i) >= ch.lfo.lut.size()) {
        throw InvalidArgument("grad_of_loss: frame index beyond LUT length");
      }
    }
  }
}

template <class T>
T evaluate(const std::vector<BasicChannelParams<T>>& channels, const SpectralBatch& batch,
           const FreqGrid& grid, std::span<const double> weights, double denominator)
{
  std::vector<ChannelFilters<T>> filters;
  filters.reserve(channels.size());
  for (const auto& ch : channels) {
    filters.push_back(channel_filters(ch, grid));
  }
  std::vector<Cplx<T>> s;
  std::vector<Cplx<T>> h;
  std::vector<Cplx<T>> pred(grid.size());
  T acc(0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::size_t m = batch.lut_index(i);
    const HalfSpectrum& x = batch.inputs[i];
    for (std::size_t c = 0; c < channels.size(); ++c) {
      variant_bins(channels[c], lfo_forward(channels[c].lfo, m), grid, s);
      combine_bins(channels[c], filters[c], s, h);
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const Cplx<T> y = x[k] * h[k];
        pred[k] = c == 0 ? y : pred[k] + y;
      }
    }
    accumulate_residual(batch.targets[i], pred, weights, acc);
  }
  return acc * T(1.0 / denominator);
}

} // namespace

double model_loss(const ModelParams& params, const SpectralBatch& batch)
{
  check_batch(params, batch);
  const FreqGrid grid(params.frame_length);
  const auto w = loss_weights(params.frame_length, batch.emphasis);
  const double den = loss_denominator(batch.targets, w);
  return evaluate(params.channels, batch, grid, w, den);
}

LossAndGrad grad_of_loss(const ModelParams& params, const SpectralBatch& batch)
{
  ad::Tape tape;
  return grad_of_loss(params, batch, tape);
}

LossAndGrad grad_of_loss(const ModelParams& params, const SpectralBatch& batch, ad::Tape& tape)
{
  check_batch(params, batch);
  const FreqGrid grid(params.frame_length);
  const auto w = loss_weights(params.frame_length, batch.emphasis);
  const double den = loss_denominator(batch.targets, w);

  tape.clear();
  ad::TapeScope scope(tape);
  const auto flat = flatten(params);
  const auto inputs = ad::make_inputs(flat);
  std::vector<BasicChannelParams<ad::Var>> channels;
  std::size_t offset = 0;
  for (const auto& ch : params.channels) {
    channels.push_back(channel_with_values<ad::Var>(ch, inputs, offset));
  }
  const ad::Var loss = evaluate(channels, batch, grid, w, den);
  if (!tape.first_nonfinite().empty()) {
    throw NumericError("grad_of_loss: non-finite value first produced by '"
                       + tape.first_nonfinite() + "'");
  }
  LossAndGrad out;
  out.loss = loss.value();
  out.tape_nodes = tape.size();
  const auto adj = tape.backward(loss.index());
  out.grads = ad::gather(inputs, adj);
  for (double g : out.grads) {
    if (!std::isfinite(g)) {
      throw NumericError("grad_of_loss: non-finite adjoint in backward pass");
    }
  }
  return out;
}

GradCheckReport check_gradients(const ModelParams& params, const SpectralBatch& batch,
                                double tolerance)
{
  const LossAndGrad lg = grad_of_loss(params, batch);
  const auto names = param_names(params);
  auto theta = flatten(params);
  ModelParams probe = params;

  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    const double h = 1e-4 * std::max(1.0, std::abs(orig));
    auto central = [&](double step) {
      theta[i] = orig + step;
      unflatten(theta, probe);
      const double lp = model_loss(probe, batch);
      theta[i] = orig - step;
      unflatten(theta, probe);
      const double lm = model_loss(probe, batch);
      theta[i] = orig;
      return (lp - lm) / (2.0 * step);
    };
    const double coarse = central(h);
    const double fine = central(0.5 * h);

    GradCheckEntry e;
    e.name = names[i];
    e.adjoint = lg.grads[i];
    // Richardson extrapolation cancels the h^2 term of the central difference.
    e.finite_difference = (4.0 * fine - coarse) / 3.0;
    const double scale = std::max(std::abs(e.adjoint), std::abs(e.finite_difference));
    e.rel_error = scale > 0.0 ? std::abs(e.adjoint - e.finite_difference) / scale : 0.0;
    if (std::abs(e.adjoint) > 1e-8) {
      e.checked = true;
      ++report.checked;
      report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
      if (e.rel_error > tolerance) {
        ++report.failures;
      }
    } else if (std::abs(e.finite_difference) > 1e-6) {
      // Tape says flat, finite differences disagree.
      e.checked = true;
      ++report.checked;
      ++report.failures;
      e.rel_error = 1.0;
      report.max_rel_error = std::max(report.max_rel_error, 1.0);
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

} // namespace modfx
