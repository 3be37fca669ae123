#include "core/nn.hpp"

#include <cmath>
#include <unordered_map>

namespace glab {

Tensor ParamStore::create(const std::string& name, Shape shape, bool requires_grad) {
  for (const auto& [n, t] : entries_)
    if (n == name) fail(Status::invalid_argument, "duplicate parameter name: " + name);
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  entries_.emplace_back(name, t);
  return t;
}

std::vector<Tensor> ParamStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& [n, t] : entries_) out.push_back(t);
  return out;
}

int64_t ParamStore::total_values() const {
  int64_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

void ParamStore::freeze() {
  for (auto& [name, t] : entries_) t.node()->requires_grad = false;
}

std::vector<ParamRecord> ParamStore::to_records() const {
  std::vector<ParamRecord> recs;
  recs.reserve(entries_.size());
  for (const auto& [name, t] : entries_) recs.push_back({name, t.shape(), t.values()});
  return recs;
}

void ParamStore::load_records(const std::vector<ParamRecord>& records) {
  std::unordered_map<std::string, const ParamRecord*> by_name;
  for (const auto& r : records) by_name[r.name] = &r;
  if (by_name.size() != records.size())
    fail(Status::invalid_argument, "checkpoint contains duplicate parameter names");
  for (auto& [name, t] : entries_) {
    auto it = by_name.find(name);
    if (it == by_name.end())
      fail(Status::invalid_argument, "checkpoint is missing parameter: " + name);
    const ParamRecord& r = *it->second;
    if (r.shape != t.shape())
      fail(Status::shape_mismatch, "checkpoint shape " + shape_str(r.shape) + " for " + name +
                                       " does not match model shape " + shape_str(t.shape()));
    t.mutable_values() = r.values;
    by_name.erase(it);
  }
  if (!by_name.empty())
    fail(Status::invalid_argument,
         "checkpoint has unknown parameter: " + by_name.begin()->first);
}

double xavier_limit(int64_t fan_in, int64_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void fill_xavier_uniform(Tensor& t, int64_t fan_in, int64_t fan_out, Rng& rng) {
  const double limit = xavier_limit(fan_in, fan_out);
  for (double& v : t.mutable_values()) v = rng.uniform(-limit, limit);
}

Tensor Dense::forward(const Tensor& x) const { return add(matmul(w, x), b); }

Dense make_dense(ParamStore& store, const std::string& name, int64_t in, int64_t out, Rng& rng) {
  Dense d;
  d.w = store.create(name + ".w", {out, in});
  d.b = store.create(name + ".b", {out, 1});
  fill_xavier_uniform(d.w, in, out, rng);
  return d;
}

Tensor ConvLayer::forward(const Tensor& x) const { return conv1d(x, w, b, stride, dilation); }

ConvLayer make_conv(ParamStore& store, const std::string& name, int64_t cin, int64_t cout,
                    int64_t kernel, int64_t dilation, Rng& rng, int64_t stride) {
  ConvLayer c;
  c.w = store.create(name + ".w", {cout, cin, kernel});
  c.b = store.create(name + ".b", {cout});
  c.stride = stride;
  c.dilation = dilation;
  fill_xavier_uniform(c.w, cin * kernel, cout * kernel, rng);
  return c;
}

Tensor ResBlock::forward(const Tensor& x) const {
  Tensor h = relu(c1.forward(x));
  h = c2.forward(h);
  const Tensor s = has_skip ? skip.forward(x) : x;
  return relu(add(h, s));
}

ResBlock make_res_block(ParamStore& store, const std::string& name, int64_t cin, int64_t cout,
                        int64_t kernel, int64_t dilation, Rng& rng) {
  ResBlock b;
  b.c1 = make_conv(store, name + ".c1", cin, cout, kernel, dilation, rng);
  b.c2 = make_conv(store, name + ".c2", cout, cout, kernel, dilation, rng);
  if (cin != cout) {
    b.skip = make_conv(store, name + ".skip", cin, cout, 1, 1, rng);
    b.has_skip = true;
  }
  return b;
}

Tensor ConvStack::forward(const Tensor& x) const {
  Tensor h = x;
  for (const ResBlock& b : blocks) h = b.forward(h);
  return h;
}

std::vector<Tensor> ConvStack::forward_all(const Tensor& x) const {
  std::vector<Tensor> outs;
  outs.reserve(blocks.size());
  Tensor h = x;
  for (const ResBlock& b : blocks) {
    h = b.forward(h);
    outs.push_back(h);
  }
  return outs;
}

ConvStack make_conv_stack(ParamStore& store, const std::string& name, int64_t cin,
                          const std::vector<int64_t>& channels, int64_t kernel,
                          const std::vector<int64_t>& dilations, Rng& rng) {
  if (channels.empty()) fail(Status::invalid_argument, "conv stack needs at least one block");
  if (dilations.empty()) fail(Status::invalid_argument, "conv stack needs a dilation schedule");
  ConvStack s;
  int64_t c = cin;
  for (size_t i = 0; i < channels.size(); ++i) {
    const int64_t d = dilations[i % dilations.size()];
    s.blocks.push_back(
        make_res_block(store, name + ".block" + std::to_string(i), c, channels[i], kernel, d, rng));
    c = channels[i];
  }
  return s;
}

int64_t conv_stack_receptive_field(int64_t blocks, int64_t kernel,
                                   const std::vector<int64_t>& dilations) {
  // Two stride-1 convs per block, each widening the field by (kernel-1)*d.
  int64_t rf = 1;
  for (int64_t i = 0; i < blocks; ++i)
    rf += 2 * (kernel - 1) * dilations[static_cast<size_t>(i) % dilations.size()];
  return rf;
}

Adam::Adam(std::vector<Tensor> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].requires_grad())
      fail(Status::invalid_argument, "optimizer parameter does not require gradients");
    m_[i].assign(static_cast<size_t>(params_[i].numel()), 0.0);
    v_[i].assign(static_cast<size_t>(params_[i].numel()), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    const bool has = p.has_grad();
    const std::vector<double>* g = has ? &p.grad() : nullptr;
    std::vector<double>& vals = p.mutable_values();
    for (size_t k = 0; k < vals.size(); ++k) {
      const double gk = has ? (*g)[k] : 0.0;
      m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * gk;
      v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * gk * gk;
      const double mhat = m_[i][k] / bc1;
      const double vhat = v_[i][k] / bc2;
      vals[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace glab
