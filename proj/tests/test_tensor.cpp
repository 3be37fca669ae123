#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/checkpoint.hpp"
#include "core/grad_check.hpp"
#include "core/op_suite.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

using namespace glab;

namespace {
Tensor rnd(Rng& rng, Shape s, double lo = -1.0, double hi = 1.0, bool grad = false) {
  std::vector<double> v(static_cast<size_t>(shape_numel(s)));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(s), std::move(v), grad);
}
}  // namespace

TEST_CASE("elementwise forward basics") {
  Tensor a = Tensor::from({2, 2}, {2.0, -1.0, 0.5, 3.0});
  Tensor b = Tensor::from({2, 2}, {2.0, 4.0, -2.0, 1.0});
  CHECK(add(a, b).values()[0] == 4.0);  // 2 + 2 = 4
  CHECK(sub(a, b).values()[1] == -5.0);
  CHECK(mul(a, b).values()[2] == -1.0);
  CHECK(div(a, b).values()[3] == 3.0);
  CHECK(relu(a).values()[1] == 0.0);
  CHECK(abs(a).values()[1] == 1.0);
  CHECK(neg(a).values()[0] == -2.0);
  CHECK(add_scalar(a, 1.5).values()[0] == 3.5);
  CHECK(mul_scalar(a, -2.0).values()[3] == -6.0);
}

TEST_CASE("broadcasting matches explicit expansion") {
  Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor col = Tensor::from({2, 1}, {10, 20});
  Tensor row = Tensor::from({3}, {1, 2, 3});
  Tensor s1 = add(a, col);
  CHECK(s1.values() == std::vector<double>{11, 12, 13, 24, 25, 26});
  Tensor s2 = mul(a, row);
  CHECK(s2.values() == std::vector<double>{1, 4, 9, 4, 10, 18});
  CHECK_THROWS_AS(add(Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}), Tensor::from({2, 2}, {1, 2, 3, 4})),
                  Error);
}

TEST_CASE("shape mismatch errors name the op and dimensions") {
  Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  try {
    matmul(a, b);
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.status() == Status::shape_mismatch);
    CHECK(std::string(e.what()).find("matmul") != std::string::npos);
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("matmul identity and batched forms") {
  Tensor m = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  CHECK(matmul(m, eye).values() == m.values());  // [[1,2],[3,4]] x I
  Tensor batched = Tensor::from({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  Tensor out = matmul(batched, eye);
  CHECK(out.shape() == Shape{2, 2, 2});
  CHECK(out.values() == batched.values());
  // shared lhs against batched rhs
  Tensor out2 = matmul(eye, batched);
  CHECK(out2.values() == batched.values());
}

TEST_CASE("conv1d identity kernel and same-length padding") {
  Tensor x = Tensor::from({1, 3}, {1, 0, 0});
  Tensor w = Tensor::from({1, 1, 1}, {1});
  Tensor y = conv1d(x, w);
  CHECK(y.shape() == Shape{1, 3});
  CHECK(y.values() == std::vector<double>{1, 0, 0});  // identity kernel

  // kernel 3 "same": zero-padded symmetric, output length preserved
  Tensor x2 = Tensor::from({1, 4}, {1, 2, 3, 4});
  Tensor k3 = Tensor::from({1, 1, 3}, {1, 1, 1});
  Tensor y2 = conv1d(x2, k3);
  CHECK(y2.shape() == Shape{1, 4});
  CHECK(y2.values() == std::vector<double>{3, 6, 9, 7});

  // stride 2: ceil(T / stride) outputs
  Tensor y3 = conv1d(x2, k3, 2);
  CHECK(y3.shape() == Shape{1, 2});
  CHECK(y3.values() == std::vector<double>{3, 9});

  // dilation 2 spans (K-1)*d+1 = 5 taps
  Tensor x3 = Tensor::from({1, 5}, {1, 2, 3, 4, 5});
  Tensor y4 = conv1d(x3, k3, 1, 2);
  CHECK(y4.shape() == Shape{1, 5});
  CHECK(y4.values() == std::vector<double>{4, 6, 9, 6, 8});  // zeros beyond both edges
}

TEST_CASE("conv1d shape validation") {
  Tensor x = Tensor::from({2, 4}, std::vector<double>(8, 1.0));
  Tensor w = Tensor::from({1, 3, 3}, std::vector<double>(9, 1.0));
  CHECK_THROWS_AS(conv1d(x, w), Error);  // kernel expects 3 input channels
}

TEST_CASE("acos clamp keeps boundary values and gradients finite") {
  Tensor x = Tensor::from({1}, {1.0 - 1e-12});
  Tensor y = acos_clamped(x);
  CHECK(y.values()[0] == doctest::Approx(std::acos(1.0 - 1e-7)));
  CHECK(y.values()[0] < 1e-3);  // ~= 0 at the clamp boundary
  Tensor xg = Tensor::from({1}, {1.0 - 1e-12}, true);
  Tape tape;
  Tensor yg = acos_clamped(xg);
  tape.backward(yg);
  CHECK(std::isfinite(xg.grad()[0]));
  // beyond the clamp window the composition is flat
  CHECK(xg.grad()[0] == 0.0);
}

TEST_CASE("gradient accumulates across multiple uses") {
  Tensor x = Tensor::from({1}, {3.0}, true);
  Tape tape;
  Tensor y = add(mul(x, x), x);  // x^2 + x -> dy/dx = 2x + 1 = 7
  tape.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(7.0));
}

TEST_CASE("backward ordering on a diamond graph") {
  // z = (x + x^2) * (x - 1); dz/dx at x=2: (1+2x)(x-1) + (x+x^2) = 5*1 + 6 = 11
  Tensor x = Tensor::from({1}, {2.0}, true);
  Tape tape;
  Tensor z = mul(add(x, mul(x, x)), add_scalar(x, -1.0));
  tape.backward(z);
  CHECK(x.grad()[0] == doctest::Approx(11.0));
}

TEST_CASE("tape misuse raises bad_state") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tape tape;
  Tensor y = sum_all(x);
  tape.backward(y);
  CHECK_THROWS_AS(tape.backward(y), Error);  // one backward per tape
  Tensor loose = Tensor::from({1}, {1.0});
  Tape t2;
  CHECK_THROWS_AS(t2.backward(loose), Error);  // never recorded
  Tensor vec = Tensor::from({2}, {1.0, 2.0}, true);
  Tape t3;
  Tensor v2 = add(vec, vec);
  CHECK_THROWS_AS(t3.backward(v2), Error);  // non-scalar loss
}

TEST_CASE("no recording happens without an active tape") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor y = add(x, x);
  CHECK_FALSE(y.requires_grad());
  Tape tape;
  {
    NoRecord nr;
    Tensor z = add(x, x);
    CHECK_FALSE(z.requires_grad());
  }
  Tensor w = add(x, x);
  CHECK(w.requires_grad());
  CHECK(tape.recorded() == 1);
}

TEST_CASE("grads accumulate across tapes until zero_grad") {
  Tensor x = Tensor::from({1}, {1.5}, true);
  {
    Tape t;
    t.backward(mul(x, x));
  }
  {
    Tape t;
    t.backward(mul(x, x));
  }
  CHECK(x.grad()[0] == doctest::Approx(6.0));  // 2 * (2x)
  x.zero_grad();
  CHECK_FALSE(x.has_grad());
}

TEST_CASE("forward is bitwise deterministic") {
  Rng rng1(99), rng2(99);
  Tensor a1 = rnd(rng1, {4, 7});
  Tensor a2 = rnd(rng2, {4, 7});
  Tensor w1 = rnd(rng1, {3, 4, 3});
  Tensor w2 = rnd(rng2, {3, 4, 3});
  Tensor y1 = conv1d(a1, w1);
  Tensor y2 = conv1d(a2, w2);
  CHECK(y1.values() == y2.values());
  CHECK(exp(mean_all(y1)).values() == exp(mean_all(y2)).values());
}

TEST_CASE("every registered op passes finite-difference grad check") {
  for (const GradCase& c : autodiff_op_cases()) {
    CAPTURE(c.name);
    double worst = 0.0;
    for (uint64_t seed : {11ULL, 12ULL, 13ULL}) worst = std::max(worst, c.run(seed));
    INFO(c.name << " max rel err " << worst);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("slice/concat/permute round trips") {
  Rng rng(5);
  Tensor x = rnd(rng, {3, 8});
  Tensor back = concat({slice(x, 1, 0, 3), slice(x, 1, 3, 8)}, 1);
  CHECK(back.values() == x.values());
  Tensor p = permute(permute(x, {1, 0}), {1, 0});
  CHECK(p.values() == x.values());
  CHECK_THROWS_AS(slice(x, 1, 5, 3), Error);
  CHECK_THROWS_AS(slice(x, 3, 0, 1), Error);
}

TEST_CASE("reductions match manual sums") {
  Tensor x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(sum_all(x).item() == 21.0);
  CHECK(mean_all(x).item() == doctest::Approx(3.5));
  Tensor s0 = sum(x, {0});
  CHECK(s0.shape() == Shape{3});
  CHECK(s0.values() == std::vector<double>{5, 7, 9});
  Tensor m1 = mean(x, {1}, true);
  CHECK(m1.shape() == Shape{2, 1});
  CHECK(m1.values() == std::vector<double>{2, 5});
}

TEST_CASE("checkpoint round trip preserves values bitwise") {
  Rng rng(42);
  std::vector<ParamRecord> recs;
  recs.push_back({"enc/w", {3, 2, 3}, rnd(rng, {3, 2, 3}).values()});
  recs.push_back({"enc/b", {3}, rnd(rng, {3}).values()});
  recs.push_back({"scalar", {}, {0.123456789012345}});
  std::string stem = "ckpt_test_roundtrip";
  save_checkpoint(stem, recs, R"({"note":"unit"})");
  auto loaded = load_checkpoint(stem);
  REQUIRE(loaded.size() == recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    CHECK(loaded[i].name == recs[i].name);
    CHECK(loaded[i].shape == recs[i].shape);
    CHECK(loaded[i].values == recs[i].values);
  }
  CHECK(load_checkpoint_meta(stem).find("unit") != std::string::npos);
  CHECK_THROWS_AS(load_checkpoint("ckpt_test_missing"), Error);
}

TEST_CASE("rng substreams are deterministic and distinct") {
  Rng a(7), b(7);
  CHECK(a.normal() == b.normal());
  CHECK(a.uniform() == b.uniform());
  Rng f1 = Rng(7).fork(1);
  Rng f1b = Rng(7).fork(1);
  Rng f2 = Rng(7).fork(2);
  CHECK(f1.uniform() == f1b.uniform());
  CHECK(f1.uniform() != f2.uniform());
}
