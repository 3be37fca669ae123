#pragma once

#include <functional>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace glab {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int64_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares reverse-mode gradients of the scalar-valued f against central
// finite differences with step eps. Error per coordinate is
// |analytic - numeric| / max(1, |numeric|); the max over coordinates is
// returned. f must be a pure function of its argument.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x0,
                           double eps = 1e-5);

// Same, probing at most max_coords coordinates chosen without replacement.
GradCheckResult grad_check_sampled(const std::function<Tensor(const Tensor&)>& f, const Tensor& x0,
                                   double eps, int64_t max_coords, Rng& rng);

}  // namespace glab
