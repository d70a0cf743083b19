#pragma once

#include <string>
#include <vector>

#include "modfx/diffmodel.hpp"
#include "modfx/loss.hpp"

namespace modfx {

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grads; // same layout as flatten(params)
  std::size_t tape_nodes = 0;
};

/// Loss of the frequency-sampling model on a batch, evaluated in double
/// precision without recording a tape.
double model_loss(const ModelParams& params, const SpectralBatch& batch);

/// Loss and exact reverse-mode gradient with respect to every parameter.
/// Throws NumericError naming the first operation that produced NaN/Inf.
LossAndGrad grad_of_loss(const ModelParams& params, const SpectralBatch& batch);

/// Reusable-tape variant for training loops.
LossAndGrad grad_of_loss(const ModelParams& params, const SpectralBatch& batch, ad::Tape& tape);

struct GradCheckEntry {
  std::string name;
  double adjoint = 0.0;
  double finite_difference = 0.0;
  double rel_error = 0.0;
  bool checked = false; // false when |adjoint| and |fd| are both below the floor
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t failures = 0;

  bool passed() const { return failures == 0; }
};

/// Richardson-extrapolated central finite differences (steps h and h/2,
/// h = 1e-4 max(1, |theta|), error O(h^4)) against the tape adjoints.
/// Parameters whose adjoint magnitude is <= 1e-8 are compared in absolute
/// terms only.
GradCheckReport check_gradients(const ModelParams& params, const SpectralBatch& batch,
                                double tolerance);

} // namespace modfx
