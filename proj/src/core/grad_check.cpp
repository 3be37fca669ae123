#include "core/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace glab {

namespace {

GradCheckResult run_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x0,
                          double eps, const std::vector<int64_t>& coords) {
  std::vector<double> analytic(static_cast<size_t>(x0.numel()), 0.0);
  {
    Tensor x = Tensor::from(x0.shape(), x0.values(), /*requires_grad=*/true);
    Tape tape;
    Tensor y = f(x);
    if (y.numel() != 1)
      fail(Status::invalid_argument, "grad_check: f must return a scalar, got " + shape_str(y.shape()));
    if (y.node()->requires_grad) {
      tape.backward(y);
      if (x.has_grad()) analytic = x.grad();
    }
  }
  GradCheckResult r;
  NoRecord silence;
  for (int64_t i : coords) {
    std::vector<double> vp = x0.values();
    vp[i] += eps;
    double fp = f(Tensor::from(x0.shape(), vp)).item();
    vp[i] = x0.values()[i] - eps;
    double fm = f(Tensor::from(x0.shape(), vp)).item();
    double numeric = (fp - fm) / (2.0 * eps);
    double rel = std::fabs(analytic[i] - numeric) / std::max(1.0, std::fabs(numeric));
    if (rel > r.max_rel_err) {
      r.max_rel_err = rel;
      r.worst_index = i;
      r.analytic = analytic[i];
      r.numeric = numeric;
    }
  }
  return r;
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x0,
                           double eps) {
  std::vector<int64_t> coords(static_cast<size_t>(x0.numel()));
  std::iota(coords.begin(), coords.end(), 0);
  return run_check(f, x0, eps, coords);
}

GradCheckResult grad_check_sampled(const std::function<Tensor(const Tensor&)>& f, const Tensor& x0,
                                   double eps, int64_t max_coords, Rng& rng) {
  int64_t n = x0.numel();
  std::vector<int64_t> coords(static_cast<size_t>(n));
  std::iota(coords.begin(), coords.end(), 0);
  if (max_coords < n) {
    // Partial Fisher-Yates: the first max_coords entries become the sample.
    for (int64_t i = 0; i < max_coords; ++i) {
      int64_t j = rng.uniform_int(i, n - 1);
      std::swap(coords[i], coords[j]);
    }
    coords.resize(static_cast<size_t>(max_coords));
  }
  return run_check(f, x0, eps, coords);
}

}  // namespace glab
