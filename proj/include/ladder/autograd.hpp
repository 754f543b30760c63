// Copyright 2026 The LADDER-VFI Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ladder/tensor.hpp"

namespace ladder {

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads `grad` of this node and accumulates into the grads of `inputs`.
  std::function<void(Node&)> backward;

  /// Gradient buffer of input i, zero-allocated on first use; null when the
  /// input does not require a gradient.
  Tensor* input_grad(std::size_t i);
};

}  // namespace detail

/// Reverse-mode differentiable handle around a Tensor. Copies share the node.
class Variable {
 public:
  Variable() = default;
  explicit Variable(Tensor value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  /// Leaf-only mutation (optimizer updates, checkpoint loads).
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const noexcept { return node_ != nullptr && node_->requires_grad; }

  bool has_grad() const { return node_ != nullptr && !node_->grad.empty(); }
  const Tensor& grad() const { return node_->grad; }
  Tensor& mutable_grad() { return node_->grad; }
  void zero_grad();

  /// Backpropagates from a single-element output with seed 1.
  void backward() const;
  void backward(const Tensor& seed) const;

  detail::Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared_node() const noexcept { return node_; }

  /// Builds an op output. The backward closure is dropped when gradient mode
  /// is off or no input requires a gradient.
  static Variable make(Tensor value, std::vector<Variable> inputs,
                       std::function<void(detail::Node&)> backward);

 private:
  std::shared_ptr<detail::Node> node_;
};

bool grad_enabled();

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace ladder
