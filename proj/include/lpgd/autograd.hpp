#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpgd/tensor.hpp"

namespace lpgd {

/// One executed operation on the tape: keeps its input/output handles and
/// whatever forward values backward() needs.
class Node {
 public:
  virtual ~Node() = default;
  virtual void backward() = 0;
  virtual const char* name() const = 0;
};

/// Record of executed op nodes in execution order. Nodes are appended as ops
/// run, so inputs of any node precede it and one reverse sweep visits every
/// node exactly once. Single-threaded by contract.
class Tape {
 public:
  template <class N, class... Args>
  void record(Args&&... args) {
    nodes_.push_back(std::make_unique<N>(std::forward<Args>(args)...));
  }

  /// Seeds d(loss)/d(loss) = 1 and runs every node's backward in reverse
  /// execution order, accumulating into the grad buffers of all
  /// requires_grad tensors reachable from `loss`.
  void backward(Tensor& loss) {
    if (loss.size() != 1) throw std::invalid_argument("Tape::backward: loss must be scalar, got " + shape_str(loss.shape()));
    if (!loss.requires_grad()) throw std::invalid_argument("Tape::backward: loss does not require grad (nothing recorded)");
    loss.grad()[0] = 1.0f;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)->backward();
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  const Node& node(std::size_t i) const { return *nodes_[i]; }

 private:
  std::vector<std::unique_ptr<Node>> nodes_;
};

namespace detail {

/// Whether an op with these inputs should be recorded; the output of a
/// recorded op gets a grad buffer so gradients can flow through it.
inline bool track(const Tape* tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape) return false;
  for (const Tensor* t : inputs)
    if (t && t->requires_grad()) return true;
  return false;
}

}  // namespace detail

}  // namespace lpgd
