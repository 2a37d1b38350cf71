#pragma once

// Reverse-mode automatic differentiation core.
//
// A TensorNode is a dense 2-D array of scalars plus the bookkeeping needed to
// backpropagate through the expression that produced it: shared_ptr edges to
// its parents and a closure that scatters this node's gradient into theirs.
// Graphs are DAGs built fresh per forward pass; parameters are long-lived leaf
// nodes whose gradients accumulate until explicitly zeroed.
//
// Shapes are always (rows x cols). Scalars are (1 x 1), vectors are rows
// (1 x d), and time series are (T x channels). The scalar type is a template
// parameter: training runs float, gradient checking runs double.

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace auxvae::nn {

template <class T>
struct TensorNode {
  int rows = 0;
  int cols = 0;
  std::vector<T> val;
  std::vector<T> grad;  // empty until first needed; same size as val after
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode<T>>> parents;
  std::function<void()> backprop;  // accumulates into parents' grad

  int size() const { return rows * cols; }

  T& at(int r, int c) { return val[static_cast<std::size_t>(r) * cols + c]; }
  T at(int r, int c) const {
    return val[static_cast<std::size_t>(r) * cols + c];
  }

  T& g(int r, int c) { return grad[static_cast<std::size_t>(r) * cols + c]; }

  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), T(0));
  }

  void zero_grad() { grad.assign(val.size(), T(0)); }
};

template <class T>
using Tensor = std::shared_ptr<TensorNode<T>>;

template <class T>
Tensor<T> tensor(int rows, int cols, bool requires_grad = false) {
  if (rows <= 0 || cols <= 0)
    throw std::invalid_argument("tensor: dimensions must be positive");
  auto n = std::make_shared<TensorNode<T>>();
  n->rows = rows;
  n->cols = cols;
  n->val.assign(static_cast<std::size_t>(rows) * cols, T(0));
  n->requires_grad = requires_grad;
  return n;
}

template <class T>
Tensor<T> tensor_from(int rows, int cols, std::vector<T> values,
                      bool requires_grad = false) {
  auto n = tensor<T>(rows, cols, requires_grad);
  if (values.size() != n->val.size())
    throw std::invalid_argument("tensor_from: value count does not match shape");
  n->val = std::move(values);
  return n;
}

template <class T>
Tensor<T> row_vector(std::vector<T> values, bool requires_grad = false) {
  int d = static_cast<int>(values.size());
  return tensor_from<T>(1, d, std::move(values), requires_grad);
}

template <class T>
Tensor<T> scalar_tensor(T value, bool requires_grad = false) {
  return tensor_from<T>(1, 1, {value}, requires_grad);
}

// True if an op consuming these parents must emit a backprop closure.
template <class T>
inline bool any_requires_grad(
    const std::vector<Tensor<T>>& parents) {
  for (const auto& p : parents)
    if (p && p->requires_grad) return true;
  return false;
}

// Marks `out` as an interior node computed from `parents`. The closure is
// attached only when some parent needs gradients; otherwise the node stays a
// constant and backward() never visits its subtree.
template <class T>
void attach(Tensor<T>& out, std::vector<Tensor<T>> parents,
            std::function<void()> backprop) {
  if (!any_requires_grad(parents)) return;
  out->requires_grad = true;
  out->parents = std::move(parents);
  out->backprop = std::move(backprop);
}

// Backpropagates from a scalar node. `seed` is the incoming gradient, useful
// for accumulating the mean of several scalar losses (seed = 1/N each).
template <class T>
void backward(const Tensor<T>& out, T seed = T(1)) {
  if (!out) throw std::invalid_argument("backward: null tensor");
  if (out->size() != 1)
    throw std::invalid_argument("backward: output must be a scalar");
  if (!out->requires_grad) return;

  // Iterative post-order DFS; nodes are visited children-first, so reversing
  // gives a topological order from `out` down to the leaves.
  std::vector<TensorNode<T>*> order;
  std::unordered_set<TensorNode<T>*> seen;
  struct Frame {
    TensorNode<T>* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({out.get(), 0});
  seen.insert(out.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      TensorNode<T>* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && seen.insert(p).second)
        stack.push_back({p, 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  for (auto* n : order) n->ensure_grad();
  out->grad[0] += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop();
  }
}

template <class T>
bool all_finite(const std::vector<T>& v) {
  for (T x : v)
    if (!std::isfinite(static_cast<double>(x))) return false;
  return true;
}

}  // namespace auxvae::nn
