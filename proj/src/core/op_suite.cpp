#include "core/op_suite.hpp"

#include <cmath>

#include "core/grad_check.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace glab {

namespace {

Tensor rand_tensor(Rng& rng, Shape shape, double lo, double hi) {
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v));
}

// Values bounded away from zero, for ops with a kink or pole there.
Tensor rand_signed(Rng& rng, Shape shape, double lo_mag, double hi_mag) {
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
  for (double& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(lo_mag, hi_mag);
  return Tensor::from(std::move(shape), std::move(v));
}

// Reduces an arbitrary op output to a scalar through fixed random weights so
// the check exercises every output element.
Tensor weighted_sum(const Tensor& y, const Tensor& w) { return sum_all(mul(y, w)); }

using UnaryOp = Tensor (*)(const Tensor&);

GradCase unary_case(const std::string& name, UnaryOp op, double lo, double hi, bool signed_mag) {
  return {name, [op, lo, hi, signed_mag](uint64_t seed) {
            Rng rng(seed);
            Shape shape{3, 5};
            Tensor x = signed_mag ? rand_signed(rng, shape, lo, hi) : rand_tensor(rng, shape, lo, hi);
            Tensor w = rand_tensor(rng, shape, -1.0, 1.0);
            auto f = [op, w](const Tensor& t) { return weighted_sum(op(t), w); };
            return grad_check(f, x).max_rel_err;
          }};
}

using BinaryOp = Tensor (*)(const Tensor&, const Tensor&);

// Differentiates through both operands at once: the probe tensor packs a and
// b side by side and the function slices them back out.
GradCase binary_case(const std::string& name, BinaryOp op, Shape sa, Shape sb, double lo,
                     double hi) {
  return {name, [op, sa, sb, lo, hi](uint64_t seed) {
            Rng rng(seed);
            int64_t na = shape_numel(sa), nb = shape_numel(sb);
            Tensor x = rand_tensor(rng, {na + nb}, lo, hi);
            Tensor w;
            {
              Tensor a0 = reshape(slice(x, 0, 0, na), sa);
              Tensor b0 = reshape(slice(x, 0, na, na + nb), sb);
              Tensor y0 = op(a0, b0);
              w = rand_tensor(rng, y0.shape(), -1.0, 1.0);
            }
            auto f = [op, sa, sb, na, nb, w](const Tensor& t) {
              Tensor a = reshape(slice(t, 0, 0, na), sa);
              Tensor b = reshape(slice(t, 0, na, na + nb), sb);
              return weighted_sum(op(a, b), w);
            };
            return grad_check(f, x).max_rel_err;
          }};
}

GradCase conv_case(const std::string& name, int64_t cin, int64_t t, int64_t cout, int64_t k,
                   int64_t stride, int64_t dilation, bool bias) {
  return {name, [=](uint64_t seed) {
            Rng rng(seed);
            int64_t nx = cin * t, nw = cout * cin * k, nb = bias ? cout : 0;
            Tensor x = rand_tensor(rng, {nx + nw + nb}, -1.0, 1.0);
            Tensor w;
            auto split = [=](const Tensor& probe) {
              Tensor xs = reshape(slice(probe, 0, 0, nx), {cin, t});
              Tensor ws = reshape(slice(probe, 0, nx, nx + nw), {cout, cin, k});
              if (!bias) return conv1d(xs, ws, stride, dilation);
              Tensor bs = reshape(slice(probe, 0, nx + nw, nx + nw + nb), {cout});
              return conv1d(xs, ws, bs, stride, dilation);
            };
            {
              Tensor y0 = split(x);
              w = rand_tensor(rng, y0.shape(), -1.0, 1.0);
            }
            auto f = [split, w](const Tensor& probe) { return weighted_sum(split(probe), w); };
            return grad_check(f, x).max_rel_err;
          }};
}

}  // namespace

std::vector<GradCase> autodiff_op_cases() {
  std::vector<GradCase> cases;
  cases.push_back(binary_case("add", &add, {3, 4}, {3, 4}, -2.0, 2.0));
  cases.push_back(binary_case("add_broadcast", &add, {3, 4}, {3, 1}, -2.0, 2.0));
  cases.push_back(binary_case("sub", &sub, {3, 4}, {3, 4}, -2.0, 2.0));
  cases.push_back(binary_case("sub_broadcast", &sub, {2, 3, 4}, {4}, -2.0, 2.0));
  cases.push_back(binary_case("mul", &mul, {3, 4}, {3, 4}, -2.0, 2.0));
  cases.push_back(binary_case("mul_broadcast", &mul, {3, 4}, {1, 4}, -2.0, 2.0));
  cases.push_back(binary_case("div", &div, {3, 4}, {3, 4}, 0.5, 2.0));
  cases.push_back(binary_case("div_broadcast", &div, {3, 4}, {3, 1}, 0.5, 2.0));
  cases.push_back(unary_case("neg", &neg, -2.0, 2.0, false));
  cases.push_back(unary_case("relu", &relu, 0.2, 1.5, true));
  cases.push_back(unary_case("abs", &abs, 0.2, 1.5, true));
  cases.push_back(unary_case("exp", &exp, -1.5, 1.5, false));
  cases.push_back(unary_case("log", &log, 0.3, 3.0, false));
  cases.push_back(unary_case("sqrt", &sqrt, 0.3, 3.0, false));
  cases.push_back(unary_case("acos_clamped", &acos_clamped, -0.9, 0.9, false));
  cases.push_back({"add_scalar", [](uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = rand_tensor(rng, {4, 3}, -2.0, 2.0);
                     Tensor w = rand_tensor(rng, {4, 3}, -1.0, 1.0);
                     auto f = [w](const Tensor& t) { return weighted_sum(add_scalar(t, 0.7), w); };
                     return grad_check(f, x).max_rel_err;
                   }});
  cases.push_back({"mul_scalar", [](uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = rand_tensor(rng, {4, 3}, -2.0, 2.0);
                     Tensor w = rand_tensor(rng, {4, 3}, -1.0, 1.0);
                     auto f = [w](const Tensor& t) { return weighted_sum(mul_scalar(t, -1.3), w); };
                     return grad_check(f, x).max_rel_err;
                   }});
  cases.push_back(binary_case("matmul_2d", &matmul, {3, 4}, {4, 5}, -1.0, 1.0));
  cases.push_back(binary_case("matmul_batched", &matmul, {2, 3, 4}, {2, 4, 5}, -1.0, 1.0));
  cases.push_back(binary_case("matmul_shared_rhs", &matmul, {2, 3, 4}, {4, 5}, -1.0, 1.0));
  cases.push_back(binary_case("matmul_shared_lhs", &matmul, {3, 4}, {2, 4, 5}, -1.0, 1.0));
  cases.push_back(conv_case("conv1d", 3, 9, 2, 3, 1, 1, true));
  cases.push_back(conv_case("conv1d_nobias", 2, 8, 3, 3, 1, 1, false));
  cases.push_back(conv_case("conv1d_stride2", 3, 9, 2, 3, 2, 1, true));
  cases.push_back(conv_case("conv1d_dilated", 2, 12, 2, 3, 1, 3, true));
  cases.push_back(conv_case("conv1d_stride3_dilated2", 2, 13, 2, 3, 3, 2, true));
  cases.push_back(conv_case("conv1d_k1", 4, 6, 3, 1, 1, 1, true));
  cases.push_back({"concat", [](uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = rand_tensor(rng, {12}, -1.0, 1.0);
                     Tensor w = rand_tensor(rng, {2, 6}, -1.0, 1.0);
                     auto f = [w](const Tensor& t) {
                       Tensor a = reshape(slice(t, 0, 0, 8), {2, 4});
                       Tensor b = reshape(slice(t, 0, 8, 12), {2, 2});
                       return weighted_sum(concat({a, b}, 1), w);
                     };
                     return grad_check(f, x).max_rel_err;
                   }});
  cases.push_back({"concat_axis0", [](uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = rand_tensor(rng, {3, 4}, -1.0, 1.0);
                     Tensor w = rand_tensor(rng, {6, 4}, -1.0, 1.0);
                     auto f = [w](const Tensor& t) { return weighted_sum(concat({t, t}, 0), w); };
                     return grad_check(f, x).max_rel_err;
                   }});
  cases.push_back({"slice", [](uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = rand_tensor(rng, {4, 6}, -1.0, 1.0);
                     Tensor w = rand_tensor(rng, {4, 3}, -1.0, 1.0);
                     auto f = [w](const Tensor& t) { return weighted_sum(slice(t, 1, 2, 5), w); };
                     return grad_check(f, x).max_rel_err;
                   }});
  cases.push_back({"permute", [](uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = rand_tensor(rng, {2, 3, 4}, -1.0, 1.0);
                     Tensor w = rand_tensor(rng, {4, 2, 3}, -1.0, 1.0);
                     auto f = [w](const Tensor& t) { return weighted_sum(permute(t, {2, 0, 1}), w); };
                     return grad_check(f, x).max_rel_err;
                   }});
  cases.push_back({"reshape", [](uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = rand_tensor(rng, {3, 4}, -1.0, 1.0);
                     Tensor w = rand_tensor(rng, {2, 6}, -1.0, 1.0);
                     auto f = [w](const Tensor& t) { return weighted_sum(reshape(t, {2, 6}), w); };
                     return grad_check(f, x).max_rel_err;
                   }});
  cases.push_back({"broadcast_to", [](uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = rand_tensor(rng, {3, 1}, -1.0, 1.0);
                     Tensor w = rand_tensor(rng, {2, 3, 4}, -1.0, 1.0);
                     auto f = [w](const Tensor& t) {
                       return weighted_sum(broadcast_to(t, {2, 3, 4}), w);
                     };
                     return grad_check(f, x).max_rel_err;
                   }});
  cases.push_back({"sum_axes", [](uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = rand_tensor(rng, {2, 3, 4}, -1.0, 1.0);
                     Tensor w = rand_tensor(rng, {3}, -1.0, 1.0);
                     auto f = [w](const Tensor& t) { return weighted_sum(sum(t, {0, 2}), w); };
                     return grad_check(f, x).max_rel_err;
                   }});
  cases.push_back({"sum_keepdim", [](uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = rand_tensor(rng, {2, 3, 4}, -1.0, 1.0);
                     Tensor w = rand_tensor(rng, {2, 1, 4}, -1.0, 1.0);
                     auto f = [w](const Tensor& t) { return weighted_sum(sum(t, {1}, true), w); };
                     return grad_check(f, x).max_rel_err;
                   }});
  cases.push_back({"mean_axes", [](uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = rand_tensor(rng, {2, 3, 4}, -1.0, 1.0);
                     Tensor w = rand_tensor(rng, {2, 4}, -1.0, 1.0);
                     auto f = [w](const Tensor& t) { return weighted_sum(mean(t, {1}), w); };
                     return grad_check(f, x).max_rel_err;
                   }});
  cases.push_back({"sum_all", [](uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = rand_tensor(rng, {3, 4}, -1.0, 1.0);
                     auto f = [](const Tensor& t) { return sum_all(t); };
                     return grad_check(f, x).max_rel_err;
                   }});
  cases.push_back({"mean_all", [](uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = rand_tensor(rng, {3, 4}, -1.0, 1.0);
                     auto f = [](const Tensor& t) { return mean_all(t); };
                     return grad_check(f, x).max_rel_err;
                   }});
  return cases;
}

GradSuiteResult run_grad_suite(uint64_t seed) {
  GradSuiteResult r;
  for (const GradCase& c : autodiff_op_cases()) {
    double err = c.run(seed);
    r.per_case.emplace_back("op/" + c.name, err);
    if (err > r.max_op_err) r.max_op_err = err;
  }
  for (const GradCase& c : loss_grad_cases()) {
    double err = c.run(seed);
    r.per_case.emplace_back("loss/" + c.name, err);
    if (err > r.max_loss_err) r.max_loss_err = err;
  }
  return r;
}

}  // namespace glab
