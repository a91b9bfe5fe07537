#include "hgfx/tape.hpp"

#include "hgfx/error.hpp"

namespace hgfx {

bool Tape::tracks(std::initializer_list<const Tensor*> inputs) const {
  if (!recording()) return false;
  for (const Tensor* t : inputs)
    if (t && t->defined() && t->requires_grad()) return true;
  return false;
}

void Tape::record(const Tensor& out, std::vector<Tensor> inputs, BackwardFn fn) {
  if (!recording()) return;
  if (backward_done_) throw ContractError("tape already consumed by backward(); call reset() first");
  produced_.insert(out.key());
  ops_.push_back(Op{out, std::move(inputs), std::move(fn)});
}

std::span<double> Tape::grad_buffer(const Tensor& t) {
  if (!t.requires_grad()) return {};
  auto& g = grads_[t.key()];
  if (g.empty()) g.assign(t.numel(), 0.0);
  return g;
}

void Tape::backward(const Tensor& loss, GradSink sink) {
  if (!recording()) throw ContractError("backward() on an inference tape");
  if (backward_done_) throw ContractError("backward() called twice without reset()");
  if (loss.numel() != 1) throw DimensionError("backward() needs a scalar loss, got " + shape_str(loss.shape()));
  if (!loss.requires_grad() || !produced_.contains(loss.key()))
    throw ContractError("loss is not connected to the tape");
  backward_done_ = true;

  grads_.clear();
  grads_[loss.key()] = {1.0};
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    auto found = grads_.find(it->out.key());
    if (found == grads_.end()) continue;
    const std::vector<double>& gout = found->second;
    it->fn(*this, gout);
  }

  if (sink == GradSink::kLeaves) {
    std::unordered_set<const void*> flushed;
    for (const auto& op : ops_) {
      for (const auto& in : op.inputs) {
        if (!in.requires_grad() || produced_.contains(in.key()) || !flushed.insert(in.key()).second) continue;
        auto g = grads_.find(in.key());
        if (g == grads_.end()) continue;
        Tensor leaf = in;
        auto dst = leaf.mutable_grad();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g->second[i];
      }
    }
  }
}

const std::vector<double>* Tape::grad(const Tensor& t) const {
  auto it = grads_.find(t.key());
  return it == grads_.end() ? nullptr : &it->second;
}

void Tape::reset() {
  ops_.clear();
  produced_.clear();
  grads_.clear();
  backward_done_ = false;
}

}  // namespace hgfx
