#pragma once

#include <string>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace glab {

// Named parameter registry. Layers register leaf tensors here so training,
// checkpointing, and gradient bookkeeping see one flat ordered list.
class ParamStore {
 public:
  Tensor create(const std::string& name, Shape shape, bool requires_grad = true);
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;
  int64_t total_values() const;
  void zero_grads();
  void freeze();  // drop requires_grad on every parameter

  std::vector<ParamRecord> to_records() const;
  // Strict by-name load: every record must match a registered parameter's
  // shape, and every parameter must be covered.
  void load_records(const std::vector<ParamRecord>& records);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

double xavier_limit(int64_t fan_in, int64_t fan_out);
void fill_xavier_uniform(Tensor& t, int64_t fan_in, int64_t fan_out, Rng& rng);

// Frame-wise fully connected layer: x [In, T] -> w x + b = [Out, T].
struct Dense {
  Tensor w;  // [Out, In]
  Tensor b;  // [Out, 1]
  Tensor forward(const Tensor& x) const;
};
Dense make_dense(ParamStore& store, const std::string& name, int64_t in, int64_t out, Rng& rng);

struct ConvLayer {
  Tensor w;  // [Cout, Cin, K]
  Tensor b;  // [Cout]
  int64_t stride = 1;
  int64_t dilation = 1;
  Tensor forward(const Tensor& x) const;
};
ConvLayer make_conv(ParamStore& store, const std::string& name, int64_t cin, int64_t cout,
                    int64_t kernel, int64_t dilation, Rng& rng, int64_t stride = 1);

// Dilated temporal residual block:
//   out = relu(conv2(relu(conv1(x))) + skip(x))
// with a 1x1 skip projection only when the channel count changes.
struct ResBlock {
  ConvLayer c1, c2, skip;
  bool has_skip = false;
  Tensor forward(const Tensor& x) const;
};
ResBlock make_res_block(ParamStore& store, const std::string& name, int64_t cin, int64_t cout,
                        int64_t kernel, int64_t dilation, Rng& rng);

// Stack of residual blocks, one per entry of `channels`, with dilations
// cycling through `dilations` (block i uses dilations[i % size]).
struct ConvStack {
  std::vector<ResBlock> blocks;
  Tensor forward(const Tensor& x) const;
  std::vector<Tensor> forward_all(const Tensor& x) const;  // every block's output
};
ConvStack make_conv_stack(ParamStore& store, const std::string& name, int64_t cin,
                          const std::vector<int64_t>& channels, int64_t kernel,
                          const std::vector<int64_t>& dilations, Rng& rng);

// Receptive field (in frames) of a ConvStack built from these settings.
int64_t conv_stack_receptive_field(int64_t blocks, int64_t kernel,
                                   const std::vector<int64_t>& dilations);

class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, double lr = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  // Applies one update from the gradients accumulated on the parameters.
  // Parameters with no accumulated gradient are treated as having zero
  // gradient for the step.
  void step();
  void zero_grad();
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  int64_t steps_taken() const { return t_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace glab
