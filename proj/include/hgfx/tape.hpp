#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hgfx/tensor.hpp"

namespace hgfx {

// Where backward() leaves gradients of leaf tensors.
enum class GradSink {
  kLeaves,    // accumulate into Tensor::grad of every reachable requires_grad leaf
  kTapeOnly,  // keep them in the tape; read back with Tape::grad()
};

// Ordered record of executed primitives for one forward pass. A tape belongs to
// one thread. Inference tapes record nothing, so ops run with no overhead.
class Tape {
 public:
  enum class Mode { kRecord, kInference };
  using BackwardFn = std::function<void(Tape&, std::span<const double> grad_out)>;

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::kRecord; }

  // True when an op over these inputs has to be recorded.
  bool tracks(std::initializer_list<const Tensor*> inputs) const;

  // Registers out as produced from inputs. out must already have requires_grad set.
  void record(const Tensor& out, std::vector<Tensor> inputs, BackwardFn fn);

  // Gradient accumulator for t during backward, empty span if t needs no grad.
  std::span<double> grad_buffer(const Tensor& t);

  void backward(const Tensor& loss, GradSink sink = GradSink::kLeaves);

  // Gradient held by the tape after backward(), nullptr if t was unreachable.
  const std::vector<double>* grad(const Tensor& t) const;

  void reset();
  std::size_t size() const { return ops_.size(); }

 private:
  struct Op {
    Tensor out;
    std::vector<Tensor> inputs;
    BackwardFn fn;
  };

  Mode mode_;
  std::vector<Op> ops_;
  std::unordered_set<const void*> produced_;
  std::unordered_map<const void*, std::vector<double>> grads_;
  bool backward_done_ = false;
};

}  // namespace hgfx
