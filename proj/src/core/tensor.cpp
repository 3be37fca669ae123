#include "core/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>

namespace glab {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string r = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) r += ", ";
    r += std::to_string(s[i]);
  }
  return r + "]";
}

std::vector<int64_t> row_major_strides(const Shape& s) {
  std::vector<int64_t> st(s.size(), 1);
  for (int64_t i = static_cast<int64_t>(s.size()) - 2; i >= 0; --i) st[i] = st[i + 1] * s[i + 1];
  return st;
}

// ---------------------------------------------------------------------------
// Tape machinery
// ---------------------------------------------------------------------------

namespace {
thread_local std::vector<Tape*> g_tape_stack;
std::atomic<uint64_t> g_tape_counter{1};
}  // namespace

Tape::Tape() : prev_(nullptr), id_(g_tape_counter.fetch_add(1)) { g_tape_stack.push_back(this); }

Tape::~Tape() {
  if (!g_tape_stack.empty() && g_tape_stack.back() == this) g_tape_stack.pop_back();
}

Tape* Tape::active() { return g_tape_stack.empty() ? nullptr : g_tape_stack.back(); }

NoRecord::NoRecord() { g_tape_stack.push_back(nullptr); }
NoRecord::~NoRecord() {
  if (!g_tape_stack.empty() && g_tape_stack.back() == nullptr) g_tape_stack.pop_back();
}

void tape_record(const NodePtr& n) {
  Tape* t = Tape::active();
  n->tape_id = t->id_;
  t->nodes_.push_back(n);
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined()) fail(Status::invalid_argument, "backward: undefined loss tensor");
  if (loss.numel() != 1)
    fail(Status::invalid_argument, "backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  if (used_) fail(Status::bad_state, "backward: tape already consumed by a previous backward call");
  const NodePtr& root = loss.node();
  if (root->tape_id != id_)
    fail(Status::bad_state, "backward: loss was not recorded on this tape (does it depend on any "
                            "tensor that requires a gradient?)");
  used_ = true;

  // Mark the subgraph that actually feeds the loss.
  std::vector<TensorNode*> stack{root.get()};
  std::vector<TensorNode*> marked;
  root->reachable = true;
  marked.push_back(root.get());
  while (!stack.empty()) {
    TensorNode* n = stack.back();
    stack.pop_back();
    for (const NodePtr& in : n->inputs) {
      if (in->tape_id == id_ && !in->reachable) {
        in->reachable = true;
        marked.push_back(in.get());
        stack.push_back(in.get());
      }
    }
  }

  root->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    TensorNode* n = it->get();
    if (!n->reachable || !n->backward_fn) continue;
    n->ensure_grad();
    n->backward_fn(*n);
  }
  for (TensorNode* n : marked) n->reachable = false;
}

// ---------------------------------------------------------------------------
// Tensor basics
// ---------------------------------------------------------------------------

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(values.size()))
    fail(Status::shape_mismatch, "Tensor::from: shape " + shape_str(shape) + " expects " +
                                     std::to_string(shape_numel(shape)) + " values, got " +
                                     std::to_string(values.size()));
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)), 0.0);
  return from(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)), value);
  return from(std::move(shape), std::move(v), requires_grad);
}

int64_t Tensor::dim(int64_t i) const {
  int64_t nd = ndim();
  if (i < 0) i += nd;
  if (i < 0 || i >= nd)
    fail(Status::invalid_argument, "Tensor::dim: axis " + std::to_string(i) + " out of range for " +
                                       shape_str(shape()));
  return node_->shape[i];
}

double Tensor::item() const {
  if (numel() != 1) fail(Status::invalid_argument, "Tensor::item: tensor is not scalar: " + shape_str(shape()));
  return node_->values[0];
}

const std::vector<double>& Tensor::grad() const {
  if (!has_grad()) fail(Status::bad_state, "Tensor::grad: no gradient accumulated for this tensor");
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.clear(); }

std::vector<double>& Tensor::mutable_values() {
  if (node_->backward_fn || !node_->inputs.empty())
    fail(Status::bad_state, "mutable_values: only leaf tensors may be rewritten in place");
  return node_->values;
}

namespace {

Tensor make_node(const char* op, Shape shape, std::vector<double> values,
                 std::vector<NodePtr> inputs, std::function<void(TensorNode&)> backward) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->op = op;
  bool wants_grad = false;
  for (const NodePtr& in : inputs)
    if (in->requires_grad) wants_grad = true;
  if (wants_grad && Tape::active() != nullptr) {
    n->requires_grad = true;
    n->inputs = std::move(inputs);
    n->backward_fn = std::move(backward);
    tape_record(n);
  }
  return Tensor(std::move(n));
}

// ---------------------------------------------------------------------------
// Broadcasting helpers
// ---------------------------------------------------------------------------

struct BPlan {
  Shape out;
  std::vector<int64_t> sa, sb;  // per-output-dim strides into each operand (0 stretches)
  int64_t n = 0;
  bool same = false;
};

BPlan plan_broadcast(const char* op, const Shape& a, const Shape& b) {
  BPlan p;
  if (a == b) {
    p.out = a;
    p.n = shape_numel(a);
    p.same = true;
    return p;
  }
  int64_t na = static_cast<int64_t>(a.size()), nb = static_cast<int64_t>(b.size());
  int64_t nd = std::max(na, nb);
  p.out.resize(nd);
  auto sta = row_major_strides(a);
  auto stb = row_major_strides(b);
  p.sa.assign(nd, 0);
  p.sb.assign(nd, 0);
  for (int64_t i = 0; i < nd; ++i) {
    int64_t ia = i - (nd - na), ib = i - (nd - nb);
    int64_t da = ia >= 0 ? a[ia] : 1;
    int64_t db = ib >= 0 ? b[ib] : 1;
    if (da != db && da != 1 && db != 1)
      fail(Status::shape_mismatch, std::string(op) + ": cannot broadcast " + shape_str(a) + " with " +
                                       shape_str(b) + " (dim " + std::to_string(i) + ": " +
                                       std::to_string(da) + " vs " + std::to_string(db) + ")");
    p.out[i] = std::max(da, db);
    if (ia >= 0 && da != 1) p.sa[i] = sta[ia];
    if (ib >= 0 && db != 1) p.sb[i] = stb[ib];
  }
  p.n = shape_numel(p.out);
  return p;
}

template <class Body>
void bcast_iter(const BPlan& p, Body body) {
  int64_t nd = static_cast<int64_t>(p.out.size());
  if (nd == 0) {
    body(int64_t{0}, int64_t{0}, int64_t{0});
    return;
  }
  std::vector<int64_t> ctr(nd, 0);
  int64_t oa = 0, ob = 0;
  for (int64_t i = 0; i < p.n; ++i) {
    body(i, oa, ob);
    for (int64_t d = nd - 1; d >= 0; --d) {
      ++ctr[d];
      oa += p.sa[d];
      ob += p.sb[d];
      if (ctr[d] < p.out[d]) break;
      oa -= p.sa[d] * p.out[d];
      ob -= p.sb[d] * p.out[d];
      ctr[d] = 0;
    }
  }
}

// FwdF(a, b) -> value; DaF/DbF(a, b, y) -> local derivative factor.
template <class FwdF, class DaF, class DbF>
Tensor ew_binary(const char* name, const Tensor& ta, const Tensor& tb, FwdF fwd, DaF da, DbF db) {
  if (!ta.defined() || !tb.defined()) fail(Status::invalid_argument, std::string(name) + ": undefined operand");
  const NodePtr& an = ta.node();
  const NodePtr& bn = tb.node();
  BPlan p = plan_broadcast(name, an->shape, bn->shape);
  std::vector<double> out(static_cast<size_t>(p.n));
  const double* av = an->values.data();
  const double* bv = bn->values.data();
  if (p.same) {
    for (int64_t i = 0; i < p.n; ++i) out[i] = fwd(av[i], bv[i]);
  } else {
    double* ov = out.data();
    bcast_iter(p, [&](int64_t i, int64_t oa, int64_t ob) { ov[i] = fwd(av[oa], bv[ob]); });
  }
  auto bw = [fwd, da, db](TensorNode& self) {
    TensorNode& A = *self.inputs[0];
    TensorNode& B = *self.inputs[1];
    BPlan p = plan_broadcast(self.op, A.shape, B.shape);
    bool wa = A.requires_grad, wb = B.requires_grad;
    if (wa) A.ensure_grad();
    if (wb) B.ensure_grad();
    const double* av = A.values.data();
    const double* bv = B.values.data();
    const double* yv = self.values.data();
    const double* gv = self.grad.data();
    if (p.same) {
      for (int64_t i = 0; i < p.n; ++i) {
        double g = gv[i];
        if (wa) A.grad[i] += da(av[i], bv[i], yv[i]) * g;
        if (wb) B.grad[i] += db(av[i], bv[i], yv[i]) * g;
      }
    } else {
      bcast_iter(p, [&](int64_t i, int64_t oa, int64_t ob) {
        double g = gv[i];
        if (wa) A.grad[oa] += da(av[oa], bv[ob], yv[i]) * g;
        if (wb) B.grad[ob] += db(av[oa], bv[ob], yv[i]) * g;
      });
    }
  };
  Shape out_shape = p.out;
  return make_node(name, std::move(out_shape), std::move(out), {an, bn}, std::move(bw));
}

// FwdF(x) -> y; DF(x, y) -> dy/dx.
template <class FwdF, class DF>
Tensor ew_unary(const char* name, const Tensor& ta, FwdF fwd, DF dfn) {
  if (!ta.defined()) fail(Status::invalid_argument, std::string(name) + ": undefined operand");
  const NodePtr& an = ta.node();
  int64_t n = static_cast<int64_t>(an->values.size());
  std::vector<double> out(static_cast<size_t>(n));
  const double* xv = an->values.data();
  for (int64_t i = 0; i < n; ++i) out[i] = fwd(xv[i]);
  auto bw = [dfn](TensorNode& self) {
    TensorNode& X = *self.inputs[0];
    if (!X.requires_grad) return;
    X.ensure_grad();
    int64_t n = static_cast<int64_t>(self.values.size());
    const double* xv = X.values.data();
    const double* yv = self.values.data();
    const double* gv = self.grad.data();
    for (int64_t i = 0; i < n; ++i) X.grad[i] += dfn(xv[i], yv[i]) * gv[i];
  };
  return make_node(name, an->shape, std::move(out), {an}, std::move(bw));
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  return ew_binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return ew_binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return ew_binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return ew_binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double out) { return -out / y; });
}

Tensor add_scalar(const Tensor& a, double c) {
  return ew_unary(
      "add_scalar", a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double c) {
  return ew_unary(
      "mul_scalar", a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

Tensor neg(const Tensor& a) {
  return ew_unary(
      "neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor relu(const Tensor& a) {
  return ew_unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor abs(const Tensor& a) {
  return ew_unary(
      "abs", a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor exp(const Tensor& a) {
  return ew_unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return ew_unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
  return ew_unary(
      "sqrt", a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Tensor acos_clamped(const Tensor& a) {
  static constexpr double lo = -1.0 + kAcosClampMargin;
  static constexpr double hi = 1.0 - kAcosClampMargin;
  return ew_unary(
      "acos_clamped", a,
      [](double x) { return std::acos(std::min(hi, std::max(lo, x))); },
      [](double x, double) {
        if (x <= lo || x >= hi) return 0.0;  // flat outside the clamp window
        return -1.0 / std::sqrt(1.0 - x * x);
      });
}

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

namespace {

// c[m,n] += a[m,k] * b[k,n]
void gemm_nn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (int64_t l = 0; l < k; ++l) {
      double v = arow[l];
      if (v == 0.0) continue;
      const double* brow = b + l * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += v * brow[j];
    }
  }
}

// c[m,k] += a[m,n] * b[k,n]^T
void gemm_nt(const double* a, const double* b, double* c, int64_t m, int64_t n, int64_t k) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    for (int64_t l = 0; l < k; ++l) {
      const double* brow = b + l * n;
      double acc = 0.0;
      for (int64_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
      crow[l] += acc;
    }
  }
}

// c[k,n] += a[m,k]^T * b[m,n]
void gemm_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (int64_t l = 0; l < k; ++l) {
      double v = arow[l];
      if (v == 0.0) continue;
      double* crow = c + l * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += v * brow[j];
    }
  }
}

struct MatmulPlan {
  int64_t m, k, n, batches;
  bool a_shared, b_shared;  // shared 2-D operand applied to every batch
  Shape out;
};

MatmulPlan plan_matmul(const Shape& a, const Shape& b) {
  if (a.size() < 2 || b.size() < 2)
    fail(Status::shape_mismatch,
         "matmul: operands need at least 2 dims, got " + shape_str(a) + " and " + shape_str(b));
  MatmulPlan p;
  p.m = a[a.size() - 2];
  p.k = a[a.size() - 1];
  int64_t kb = b[b.size() - 2];
  p.n = b[b.size() - 1];
  if (p.k != kb)
    fail(Status::shape_mismatch, "matmul: inner dims differ: " + shape_str(a) + " x " + shape_str(b));
  Shape ba(a.begin(), a.end() - 2), bb(b.begin(), b.end() - 2);
  p.a_shared = ba.empty() && !bb.empty();
  p.b_shared = bb.empty() && !ba.empty();
  Shape batch;
  if (!ba.empty() && !bb.empty()) {
    if (ba != bb)
      fail(Status::shape_mismatch,
           "matmul: batch dims differ: " + shape_str(a) + " x " + shape_str(b));
    batch = ba;
  } else {
    batch = ba.empty() ? bb : ba;
  }
  p.batches = shape_numel(batch);
  p.out = batch;
  p.out.push_back(p.m);
  p.out.push_back(p.n);
  return p;
}

}  // namespace

Tensor matmul(const Tensor& ta, const Tensor& tb) {
  const NodePtr& an = ta.node();
  const NodePtr& bn = tb.node();
  MatmulPlan p = plan_matmul(an->shape, bn->shape);
  std::vector<double> out(static_cast<size_t>(p.batches * p.m * p.n), 0.0);
  const double* av = an->values.data();
  const double* bv = bn->values.data();
  for (int64_t bi = 0; bi < p.batches; ++bi) {
    const double* ab = av + (p.a_shared ? 0 : bi * p.m * p.k);
    const double* bb = bv + (p.b_shared ? 0 : bi * p.k * p.n);
    gemm_nn(ab, bb, out.data() + bi * p.m * p.n, p.m, p.k, p.n);
  }
  auto bw = [](TensorNode& self) {
    TensorNode& A = *self.inputs[0];
    TensorNode& B = *self.inputs[1];
    MatmulPlan p = plan_matmul(A.shape, B.shape);
    const double* gv = self.grad.data();
    const double* av = A.values.data();
    const double* bv = B.values.data();
    if (A.requires_grad) {
      A.ensure_grad();
      for (int64_t bi = 0; bi < p.batches; ++bi) {
        const double* g = gv + bi * p.m * p.n;
        const double* bb = bv + (p.b_shared ? 0 : bi * p.k * p.n);
        double* ga = A.grad.data() + (p.a_shared ? 0 : bi * p.m * p.k);
        gemm_nt(g, bb, ga, p.m, p.n, p.k);
      }
    }
    if (B.requires_grad) {
      B.ensure_grad();
      for (int64_t bi = 0; bi < p.batches; ++bi) {
        const double* g = gv + bi * p.m * p.n;
        const double* ab = av + (p.a_shared ? 0 : bi * p.m * p.k);
        double* gb = B.grad.data() + (p.b_shared ? 0 : bi * p.k * p.n);
        gemm_tn(ab, g, gb, p.m, p.k, p.n);
      }
    }
  };
  Shape out_shape = p.out;
  return make_node("matmul", std::move(out_shape), std::move(out), {an, bn}, std::move(bw));
}

// ---------------------------------------------------------------------------
// conv1d
// ---------------------------------------------------------------------------

namespace {

struct ConvPlan {
  int64_t cin, t, cout, k, stride, dilation, pad, t_out;
};

ConvPlan plan_conv(const Shape& x, const Shape& w, const Shape* bias, int64_t stride,
                   int64_t dilation) {
  if (x.size() != 2) fail(Status::shape_mismatch, "conv1d: input must be [C, T], got " + shape_str(x));
  if (w.size() != 3)
    fail(Status::shape_mismatch, "conv1d: kernel must be [Cout, Cin, K], got " + shape_str(w));
  if (stride < 1 || dilation < 1)
    fail(Status::invalid_argument, "conv1d: stride and dilation must be >= 1");
  ConvPlan p;
  p.cin = x[0];
  p.t = x[1];
  p.cout = w[0];
  p.k = w[2];
  p.stride = stride;
  p.dilation = dilation;
  if (w[1] != p.cin)
    fail(Status::shape_mismatch, "conv1d: kernel expects " + std::to_string(w[1]) +
                                     " input channels, input has " + std::to_string(p.cin));
  if (bias && (bias->size() != 1 || (*bias)[0] != p.cout))
    fail(Status::shape_mismatch, "conv1d: bias must be [Cout]");
  int64_t span = (p.k - 1) * dilation + 1;
  p.pad = (span - 1) / 2;
  p.t_out = (p.t + stride - 1) / stride;
  return p;
}

// Valid output range [lo, hi) such that ti = to*stride + off stays in [0, T).
inline void conv_range(int64_t off, int64_t stride, int64_t t, int64_t t_out, int64_t& lo,
                       int64_t& hi) {
  lo = 0;
  if (off < 0) lo = (-off + stride - 1) / stride;
  int64_t last = t - 1 - off;
  hi = last < 0 ? 0 : last / stride + 1;
  if (hi > t_out) hi = t_out;
  if (lo > hi) lo = hi;
}

}  // namespace

Tensor conv1d(const Tensor& tx, const Tensor& tw, const Tensor& tbias, int64_t stride,
              int64_t dilation) {
  const NodePtr& xn = tx.node();
  const NodePtr& wn = tw.node();
  bool has_bias = tbias.defined();
  NodePtr bn = has_bias ? tbias.node() : nullptr;
  Shape bshape = has_bias ? bn->shape : Shape{};
  ConvPlan p = plan_conv(xn->shape, wn->shape, has_bias ? &bshape : nullptr, stride, dilation);
  std::vector<double> out(static_cast<size_t>(p.cout * p.t_out), 0.0);
  const double* xv = xn->values.data();
  const double* wv = wn->values.data();
  for (int64_t co = 0; co < p.cout; ++co) {
    double* yrow = out.data() + co * p.t_out;
    if (has_bias) {
      double b0 = bn->values[co];
      for (int64_t to = 0; to < p.t_out; ++to) yrow[to] = b0;
    }
    for (int64_t ci = 0; ci < p.cin; ++ci) {
      const double* xrow = xv + ci * p.t;
      const double* wrow = wv + (co * p.cin + ci) * p.k;
      for (int64_t k = 0; k < p.k; ++k) {
        double w0 = wrow[k];
        if (w0 == 0.0) continue;
        int64_t off = k * p.dilation - p.pad;
        int64_t lo, hi;
        conv_range(off, p.stride, p.t, p.t_out, lo, hi);
        if (p.stride == 1) {
          const double* xs = xrow + off + lo;
          for (int64_t to = lo; to < hi; ++to) yrow[to] += w0 * xs[to - lo];
        } else {
          for (int64_t to = lo; to < hi; ++to) yrow[to] += w0 * xrow[to * p.stride + off];
        }
      }
    }
  }
  auto bw = [stride, dilation, has_bias](TensorNode& self) {
    TensorNode& X = *self.inputs[0];
    TensorNode& W = *self.inputs[1];
    Shape bshape = has_bias ? self.inputs[2]->shape : Shape{};
    ConvPlan p = plan_conv(X.shape, W.shape, has_bias ? &bshape : nullptr, stride, dilation);
    const double* gv = self.grad.data();
    const double* xv = X.values.data();
    const double* wv = W.values.data();
    if (X.requires_grad) X.ensure_grad();
    if (W.requires_grad) W.ensure_grad();
    for (int64_t co = 0; co < p.cout; ++co) {
      const double* grow = gv + co * p.t_out;
      for (int64_t ci = 0; ci < p.cin; ++ci) {
        const double* xrow = xv + ci * p.t;
        const double* wrow = wv + (co * p.cin + ci) * p.k;
        double* gxrow = X.requires_grad ? X.grad.data() + ci * p.t : nullptr;
        double* gwrow = W.requires_grad ? W.grad.data() + (co * p.cin + ci) * p.k : nullptr;
        for (int64_t k = 0; k < p.k; ++k) {
          int64_t off = k * p.dilation - p.pad;
          int64_t lo, hi;
          conv_range(off, p.stride, p.t, p.t_out, lo, hi);
          if (gxrow) {
            double w0 = wrow[k];
            if (p.stride == 1) {
              double* xs = gxrow + off + lo;
              for (int64_t to = lo; to < hi; ++to) xs[to - lo] += w0 * grow[to];
            } else {
              for (int64_t to = lo; to < hi; ++to) gxrow[to * p.stride + off] += w0 * grow[to];
            }
          }
          if (gwrow) {
            double acc = 0.0;
            if (p.stride == 1) {
              const double* xs = xrow + off + lo;
              for (int64_t to = lo; to < hi; ++to) acc += xs[to - lo] * grow[to];
            } else {
              for (int64_t to = lo; to < hi; ++to) acc += xrow[to * p.stride + off] * grow[to];
            }
            gwrow[k] += acc;
          }
        }
      }
      if (has_bias) {
        TensorNode& B = *self.inputs[2];
        if (B.requires_grad) {
          B.ensure_grad();
          double acc = 0.0;
          for (int64_t to = 0; to < p.t_out; ++to) acc += grow[to];
          B.grad[co] += acc;
        }
      }
    }
  };
  std::vector<NodePtr> inputs{xn, wn};
  if (has_bias) inputs.push_back(bn);
  return make_node("conv1d", {p.cout, p.t_out}, std::move(out), std::move(inputs), std::move(bw));
}

Tensor conv1d(const Tensor& x, const Tensor& w, int64_t stride, int64_t dilation) {
  return conv1d(x, w, Tensor(), stride, dilation);
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

namespace {
int64_t normalize_axis(const char* op, int64_t axis, int64_t nd) {
  int64_t a = axis < 0 ? axis + nd : axis;
  if (a < 0 || a >= nd)
    fail(Status::invalid_argument,
         std::string(op) + ": axis " + std::to_string(axis) + " out of range for rank " + std::to_string(nd));
  return a;
}
}  // namespace

Tensor concat(const std::vector<Tensor>& parts, int64_t axis) {
  if (parts.empty()) fail(Status::invalid_argument, "concat: no inputs");
  int64_t nd = parts[0].ndim();
  int64_t ax = normalize_axis("concat", axis, nd);
  Shape out_shape = parts[0].shape();
  int64_t total_axis = 0;
  for (const Tensor& t : parts) {
    if (t.ndim() != nd)
      fail(Status::shape_mismatch, "concat: rank mismatch: " + shape_str(parts[0].shape()) + " vs " +
                                       shape_str(t.shape()));
    for (int64_t d = 0; d < nd; ++d) {
      if (d == ax) continue;
      if (t.shape()[d] != out_shape[d])
        fail(Status::shape_mismatch, "concat: dim " + std::to_string(d) + " mismatch: " +
                                         shape_str(parts[0].shape()) + " vs " + shape_str(t.shape()));
    }
    total_axis += t.shape()[ax];
  }
  out_shape[ax] = total_axis;
  int64_t outer = 1, inner = 1;
  for (int64_t d = 0; d < ax; ++d) outer *= out_shape[d];
  for (int64_t d = ax + 1; d < nd; ++d) inner *= out_shape[d];
  std::vector<double> out(static_cast<size_t>(shape_numel(out_shape)));
  int64_t row_out = total_axis * inner;
  int64_t at = 0;
  for (const Tensor& t : parts) {
    int64_t rows = t.shape()[ax] * inner;
    const double* src = t.values().data();
    for (int64_t o = 0; o < outer; ++o)
      std::memcpy(out.data() + o * row_out + at, src + o * rows, sizeof(double) * rows);
    at += rows;
  }
  auto bw = [ax](TensorNode& self) {
    int64_t nd = static_cast<int64_t>(self.shape.size());
    int64_t outer = 1, inner = 1;
    for (int64_t d = 0; d < ax; ++d) outer *= self.shape[d];
    for (int64_t d = ax + 1; d < nd; ++d) inner *= self.shape[d];
    int64_t row_out = self.shape[ax] * inner;
    int64_t at = 0;
    for (const NodePtr& in : self.inputs) {
      int64_t rows = in->shape[ax] * inner;
      if (in->requires_grad) {
        in->ensure_grad();
        for (int64_t o = 0; o < outer; ++o) {
          const double* g = self.grad.data() + o * row_out + at;
          double* gi = in->grad.data() + o * rows;
          for (int64_t r = 0; r < rows; ++r) gi[r] += g[r];
        }
      }
      at += rows;
    }
  };
  std::vector<NodePtr> inputs;
  inputs.reserve(parts.size());
  for (const Tensor& t : parts) inputs.push_back(t.node());
  return make_node("concat", std::move(out_shape), std::move(out), std::move(inputs), std::move(bw));
}

Tensor slice(const Tensor& a, int64_t axis, int64_t start, int64_t stop) {
  const NodePtr& an = a.node();
  int64_t nd = a.ndim();
  int64_t ax = normalize_axis("slice", axis, nd);
  int64_t len = an->shape[ax];
  if (start < 0 || stop > len || start >= stop)
    fail(Status::invalid_argument, "slice: range [" + std::to_string(start) + ", " + std::to_string(stop) +
                                       ") invalid for axis of length " + std::to_string(len));
  Shape out_shape = an->shape;
  out_shape[ax] = stop - start;
  int64_t outer = 1, inner = 1;
  for (int64_t d = 0; d < ax; ++d) outer *= an->shape[d];
  for (int64_t d = ax + 1; d < nd; ++d) inner *= an->shape[d];
  std::vector<double> out(static_cast<size_t>(shape_numel(out_shape)));
  int64_t in_row = len * inner, out_row = (stop - start) * inner;
  for (int64_t o = 0; o < outer; ++o)
    std::memcpy(out.data() + o * out_row, an->values.data() + o * in_row + start * inner,
                sizeof(double) * out_row);
  auto bw = [ax, start](TensorNode& self) {
    TensorNode& X = *self.inputs[0];
    if (!X.requires_grad) return;
    X.ensure_grad();
    int64_t nd = static_cast<int64_t>(X.shape.size());
    int64_t outer = 1, inner = 1;
    for (int64_t d = 0; d < ax; ++d) outer *= X.shape[d];
    for (int64_t d = ax + 1; d < nd; ++d) inner *= X.shape[d];
    int64_t in_row = X.shape[ax] * inner, out_row = self.shape[ax] * inner;
    for (int64_t o = 0; o < outer; ++o) {
      const double* g = self.grad.data() + o * out_row;
      double* gi = X.grad.data() + o * in_row + start * inner;
      for (int64_t r = 0; r < out_row; ++r) gi[r] += g[r];
    }
  };
  return make_node("slice", std::move(out_shape), std::move(out), {an}, std::move(bw));
}

Tensor permute(const Tensor& a, const std::vector<int64_t>& perm) {
  const NodePtr& an = a.node();
  int64_t nd = a.ndim();
  if (static_cast<int64_t>(perm.size()) != nd)
    fail(Status::invalid_argument, "permute: perm size " + std::to_string(perm.size()) +
                                       " does not match rank " + std::to_string(nd));
  std::vector<bool> seen(nd, false);
  for (int64_t p : perm) {
    if (p < 0 || p >= nd || seen[p]) fail(Status::invalid_argument, "permute: invalid permutation");
    seen[p] = true;
  }
  Shape out_shape(nd);
  for (int64_t i = 0; i < nd; ++i) out_shape[i] = an->shape[perm[i]];
  auto in_strides = row_major_strides(an->shape);
  std::vector<int64_t> src_stride(nd);
  for (int64_t i = 0; i < nd; ++i) src_stride[i] = in_strides[perm[i]];
  int64_t n = a.numel();
  std::vector<double> out(static_cast<size_t>(n));
  {
    std::vector<int64_t> ctr(nd, 0);
    int64_t src = 0;
    const double* xv = an->values.data();
    for (int64_t i = 0; i < n; ++i) {
      out[i] = xv[src];
      for (int64_t d = nd - 1; d >= 0; --d) {
        ++ctr[d];
        src += src_stride[d];
        if (ctr[d] < out_shape[d]) break;
        src -= src_stride[d] * out_shape[d];
        ctr[d] = 0;
      }
    }
  }
  auto bw = [perm](TensorNode& self) {
    TensorNode& X = *self.inputs[0];
    if (!X.requires_grad) return;
    X.ensure_grad();
    int64_t nd = static_cast<int64_t>(X.shape.size());
    auto in_strides = row_major_strides(X.shape);
    std::vector<int64_t> src_stride(nd);
    for (int64_t i = 0; i < nd; ++i) src_stride[i] = in_strides[perm[i]];
    std::vector<int64_t> ctr(nd, 0);
    int64_t src = 0;
    int64_t n = static_cast<int64_t>(self.values.size());
    const double* gv = self.grad.data();
    for (int64_t i = 0; i < n; ++i) {
      X.grad[src] += gv[i];
      for (int64_t d = nd - 1; d >= 0; --d) {
        ++ctr[d];
        src += src_stride[d];
        if (ctr[d] < self.shape[d]) break;
        src -= src_stride[d] * self.shape[d];
        ctr[d] = 0;
      }
    }
  };
  return make_node("permute", std::move(out_shape), std::move(out), {an}, std::move(bw));
}

Tensor reshape(const Tensor& a, Shape shape) {
  const NodePtr& an = a.node();
  if (shape_numel(shape) != a.numel())
    fail(Status::shape_mismatch, "reshape: cannot view " + shape_str(an->shape) + " as " + shape_str(shape));
  std::vector<double> out = an->values;
  auto bw = [](TensorNode& self) {
    TensorNode& X = *self.inputs[0];
    if (!X.requires_grad) return;
    X.ensure_grad();
    int64_t n = static_cast<int64_t>(self.values.size());
    const double* gv = self.grad.data();
    for (int64_t i = 0; i < n; ++i) X.grad[i] += gv[i];
  };
  return make_node("reshape", std::move(shape), std::move(out), {an}, std::move(bw));
}

Tensor broadcast_to(const Tensor& a, const Shape& shape) {
  const NodePtr& an = a.node();
  BPlan p = plan_broadcast("broadcast_to", an->shape, shape);
  if (p.out != shape)
    fail(Status::shape_mismatch,
         "broadcast_to: cannot broadcast " + shape_str(an->shape) + " to " + shape_str(shape));
  if (p.same) return reshape(a, p.out);
  std::vector<double> out(static_cast<size_t>(p.n));
  const double* xv = an->values.data();
  bcast_iter(p, [&](int64_t i, int64_t oa, int64_t) { out[i] = xv[oa]; });
  Shape target = shape;
  auto bw = [target](TensorNode& self) {
    TensorNode& X = *self.inputs[0];
    if (!X.requires_grad) return;
    X.ensure_grad();
    BPlan p = plan_broadcast("broadcast_to", X.shape, target);
    const double* gv = self.grad.data();
    bcast_iter(p, [&](int64_t i, int64_t oa, int64_t) { X.grad[oa] += gv[i]; });
  };
  return make_node("broadcast_to", Shape(shape), std::move(out), {an}, std::move(bw));
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

namespace {

struct ReducePlan {
  Shape out;            // result shape
  std::vector<int64_t> out_stride_per_in_dim;  // 0 for reduced dims
  int64_t red_count = 1;
};

ReducePlan plan_reduce(const char* op, const Shape& in, const std::vector<int64_t>& axes,
                       bool keepdim) {
  int64_t nd = static_cast<int64_t>(in.size());
  std::vector<bool> red(nd, false);
  for (int64_t a : axes) {
    int64_t ax = normalize_axis(op, a, nd);
    if (red[ax]) fail(Status::invalid_argument, std::string(op) + ": duplicate axis");
    red[ax] = true;
  }
  ReducePlan p;
  for (int64_t d = 0; d < nd; ++d) {
    if (red[d]) {
      p.red_count *= in[d];
      if (keepdim) p.out.push_back(1);
    } else {
      p.out.push_back(in[d]);
    }
  }
  auto out_str = row_major_strides(p.out);
  p.out_stride_per_in_dim.assign(nd, 0);
  int64_t oi = 0;
  for (int64_t d = 0; d < nd; ++d) {
    if (red[d]) {
      if (keepdim) ++oi;  // size-1 axis, stride contribution stays 0
      continue;
    }
    p.out_stride_per_in_dim[d] = out_str[oi];
    ++oi;
  }
  return p;
}

template <class Body>
void reduce_iter(const Shape& in, const std::vector<int64_t>& ostride, Body body) {
  int64_t nd = static_cast<int64_t>(in.size());
  int64_t n = shape_numel(in);
  if (nd == 0) {
    body(int64_t{0}, int64_t{0});
    return;
  }
  std::vector<int64_t> ctr(nd, 0);
  int64_t o = 0;
  for (int64_t i = 0; i < n; ++i) {
    body(i, o);
    for (int64_t d = nd - 1; d >= 0; --d) {
      ++ctr[d];
      o += ostride[d];
      if (ctr[d] < in[d]) break;
      o -= ostride[d] * in[d];
      ctr[d] = 0;
    }
  }
}

Tensor reduce_op(const char* name, const Tensor& a, const std::vector<int64_t>& axes, bool keepdim,
                 bool take_mean) {
  const NodePtr& an = a.node();
  ReducePlan p = plan_reduce(name, an->shape, axes, keepdim);
  std::vector<double> out(static_cast<size_t>(shape_numel(p.out)), 0.0);
  const double* xv = an->values.data();
  reduce_iter(an->shape, p.out_stride_per_in_dim, [&](int64_t i, int64_t o) { out[o] += xv[i]; });
  double scale = take_mean ? 1.0 / static_cast<double>(p.red_count) : 1.0;
  if (take_mean)
    for (double& v : out) v *= scale;
  std::vector<int64_t> axes_copy = axes;
  auto bw = [axes_copy, keepdim, scale, name](TensorNode& self) {
    TensorNode& X = *self.inputs[0];
    if (!X.requires_grad) return;
    X.ensure_grad();
    ReducePlan p = plan_reduce(name, X.shape, axes_copy, keepdim);
    const double* gv = self.grad.data();
    reduce_iter(X.shape, p.out_stride_per_in_dim,
                [&](int64_t i, int64_t o) { X.grad[i] += gv[o] * scale; });
  };
  return make_node(name, Shape(p.out), std::move(out), {an}, std::move(bw));
}

}  // namespace

Tensor sum(const Tensor& a, const std::vector<int64_t>& axes, bool keepdim) {
  return reduce_op("sum", a, axes, keepdim, false);
}

Tensor mean(const Tensor& a, const std::vector<int64_t>& axes, bool keepdim) {
  return reduce_op("mean", a, axes, keepdim, true);
}

Tensor sum_all(const Tensor& a) {
  std::vector<int64_t> axes(a.ndim());
  for (int64_t i = 0; i < a.ndim(); ++i) axes[i] = i;
  return reduce_op("sum", a, axes, false, false);
}

Tensor mean_all(const Tensor& a) {
  std::vector<int64_t> axes(a.ndim());
  for (int64_t i = 0; i < a.ndim(); ++i) axes[i] = i;
  return reduce_op("mean", a, axes, false, true);
}

}  // namespace glab
