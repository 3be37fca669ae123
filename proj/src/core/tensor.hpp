#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace glab {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);
std::vector<int64_t> row_major_strides(const Shape& s);

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

struct TensorNode {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // sized on first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<NodePtr> inputs;                    // set only while recording
  std::function<void(TensorNode&)> backward_fn;   // accumulates into inputs' grad
  uint64_t tape_id = 0;                           // id of the recording tape, 0 = none
  bool reachable = false;                         // scratch used by Tape::backward

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
};

class Tensor;

// Reverse-mode tape. Constructing a Tape makes it the active recorder for the
// current thread (tapes nest as a stack). Ops record themselves while a tape
// is active and at least one input requires a gradient. Tapes are
// single-threaded; independent tapes may run on independent threads.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Seeds d(loss)/d(loss) = 1 and walks the recorded ops once in reverse
  // creation order, accumulating gradients into every reachable node.
  // loss must be scalar, recorded on this tape, and backward may run once.
  void backward(const Tensor& loss);

  size_t recorded() const { return nodes_.size(); }
  static Tape* active();

 private:
  friend void tape_record(const NodePtr& n);
  std::vector<NodePtr> nodes_;
  Tape* prev_;
  uint64_t id_;
  bool used_ = false;
};

// Suppresses recording for the current scope (used by finite-difference
// probes and evaluation paths that run while a training tape is active).
class NoRecord {
 public:
  NoRecord();
  ~NoRecord();
  NoRecord(const NoRecord&) = delete;
  NoRecord& operator=(const NoRecord&) = delete;
};

// Value handle over a shared node. Values are immutable once produced by an
// op; leaves owned by an optimizer may be rewritten between tapes via
// mutable_values().
class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor scalar(double v) { return from({}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t ndim() const { return static_cast<int64_t>(node_->shape.size()); }
  int64_t numel() const { return static_cast<int64_t>(node_->values.size()); }
  int64_t dim(int64_t i) const;  // negative i counts from the back
  const std::vector<double>& values() const { return node_->values; }
  double item() const;
  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() == node_->values.size(); }
  const std::vector<double>& grad() const;
  void zero_grad();
  std::vector<double>& mutable_values();

  const NodePtr& node() const { return node_; }
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

 private:
  NodePtr node_;
};

inline constexpr double kAcosClampMargin = 1e-7;

// Elementwise binary ops broadcast trailing dimensions (a size-1 axis
// stretches against the other operand).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
// acos with the argument clamped to [-1 + margin, 1 - margin]; the gradient
// is the exact derivative of the clamped composition (zero outside).
Tensor acos_clamped(const Tensor& a);

// matmul supports plain 2-D products and batched [*, m, k] x [*, k, n]
// products where either operand may instead be a shared 2-D matrix.
Tensor matmul(const Tensor& a, const Tensor& b);

// 1-D convolution (cross-correlation) over x [Cin, T] with kernel
// w [Cout, Cin, K] and optional bias [Cout]. Zero-padded symmetric "same":
// output length ceil(T / stride).
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias, int64_t stride = 1,
              int64_t dilation = 1);
Tensor conv1d(const Tensor& x, const Tensor& w, int64_t stride = 1, int64_t dilation = 1);

Tensor concat(const std::vector<Tensor>& parts, int64_t axis);
Tensor slice(const Tensor& a, int64_t axis, int64_t start, int64_t stop);
Tensor permute(const Tensor& a, const std::vector<int64_t>& perm);
Tensor reshape(const Tensor& a, Shape shape);
Tensor broadcast_to(const Tensor& a, const Shape& shape);
Tensor sum(const Tensor& a, const std::vector<int64_t>& axes, bool keepdim = false);
Tensor mean(const Tensor& a, const std::vector<int64_t>& axes, bool keepdim = false);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator+(const Tensor& a, double c) { return add_scalar(a, c); }
inline Tensor operator-(const Tensor& a, double c) { return add_scalar(a, -c); }
inline Tensor operator*(const Tensor& a, double c) { return mul_scalar(a, c); }
inline Tensor operator/(const Tensor& a, double c) { return mul_scalar(a, 1.0 / c); }
inline Tensor operator*(double c, const Tensor& a) { return mul_scalar(a, c); }

inline Tensor square(const Tensor& a) { return mul(a, a); }
inline Tensor clamp_min(const Tensor& a, double c) { return add_scalar(relu(add_scalar(a, -c)), c); }
inline Tensor clamp_max(const Tensor& a, double c) {
  return neg(add_scalar(relu(add_scalar(neg(a), c)), -c));
}

}  // namespace glab
