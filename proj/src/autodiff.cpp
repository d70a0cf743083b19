#include "modfx/autodiff.hpp"

#include <stdexcept>

namespace modfx::ad {

std::vector<double> Tape::backward(std::int32_t output) const
{
  std::vector<double> adj(nodes_.size(), 0.0);
  if (output < 0) {
    return adj;
  }
  adj[static_cast<std::size_t>(output)] = 1.0;
  for (std::int32_t i = output; i >= 0; --i) {
    const double g = adj[static_cast<std::size_t>(i)];
    if (g == 0.0) {
      continue;
    }
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.a >= 0) {
      adj[static_cast<std::size_t>(n.a)] += n.da * g;
    }
    if (n.b >= 0) {
      adj[static_cast<std::size_t>(n.b)] += n.db * g;
    }
  }
  return adj;
}

std::vector<Var> make_inputs(std::span<const double> values)
{
  if (active_tape() == nullptr) {
    throw std::logic_error("make_inputs: no active tape");
  }
  std::vector<Var> out;
  out.reserve(values.size());
  for (double v : values) {
    out.push_back(Var::input(v));
  }
  return out;
}

std::vector<double> gather(std::span<const Var> inputs, std::span<const double> adjoints)
{
  std::vector<double> out(inputs.size(), 0.0);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto idx = inputs[i].index();
    if (idx >= 0 && static_cast<std::size_t>(idx) < adjoints.size()) {
      out[i] = adjoints[static_cast<std::size_t>(idx)];
    }
  }
  return out;
}

} // namespace modfx::ad
