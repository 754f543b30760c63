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

#include "ladder/autograd.hpp"

#include <unordered_set>

#include "ladder/error.hpp"

namespace ladder {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor* detail::Node::input_grad(std::size_t i) {
  Node& in = *inputs[i];
  if (!in.requires_grad) return nullptr;
  if (in.grad.empty()) in.grad = Tensor(in.value.shape());
  return &in.grad;
}

Variable::Variable(Tensor value, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

void Variable::zero_grad() {
  if (node_ != nullptr) node_->grad = Tensor();
}

Variable Variable::make(Tensor value, std::vector<Variable> inputs,
                        std::function<void(detail::Node&)> backward) {
  Variable out(std::move(value), false);
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  out.node_->requires_grad = true;
  out.node_->inputs.reserve(inputs.size());
  for (auto& in : inputs) out.node_->inputs.push_back(in.node_);
  out.node_->backward = std::move(backward);
  return out;
}

void Variable::backward() const {
  require(defined() && value().numel() == 1, "backward() without a seed needs a scalar output");
  backward(Tensor(shape(), 1.0f));
}

void Variable::backward(const Tensor& seed) const {
  require(defined(), "backward on an undefined variable");
  require(seed.shape() == shape(), "seed shape {} does not match output {}", seed.shape().str(),
          shape().str());
  if (!requires_grad()) return;

  // Iterative post-order DFS gives a topological order. The order holds
  // owning pointers because nodes drop their inputs as they finish.
  std::vector<std::shared_ptr<detail::Node>> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<std::shared_ptr<detail::Node>, std::size_t>> stack;
  stack.emplace_back(node_, 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      const std::shared_ptr<detail::Node>& child = node->inputs[next++];
      if (child->requires_grad && visited.insert(child.get()).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  if (node_->grad.empty()) {
    node_->grad = seed;
  } else {
    for (std::size_t i = 0; i < seed.numel(); ++i) node_->grad.data()[i] += seed.data()[i];
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = it->get();
    if (!node->backward) continue;
    if (!node->grad.empty()) node->backward(*node);
    // Interior nodes are single-use: release the graph as we go.
    node->grad = Tensor();
    node->backward = nullptr;
    node->inputs.clear();
  }
}

}  // namespace ladder
