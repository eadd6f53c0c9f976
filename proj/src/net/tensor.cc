#include "bevtrack/net/tensor.h"

#include <unordered_set>
#include <utility>

#include "bevtrack/errors.h"

namespace bevtrack::net {

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T>::Tensor(std::vector<int> s, T fill) : shape(std::move(s)), data(shape_numel(shape), fill) {}

template <typename T>
Tensor<T>::Tensor(std::vector<int> s, std::vector<T> values)
    : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != shape_numel(shape)) {
    throw ShapeError("tensor value count does not match shape " + shape_str(shape));
  }
}

template <typename T>
Var<T> constant(Tensor<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  return n;
}

template <typename T>
Var<T> parameter(Tensor<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->requires_grad = true;
  return n;
}

template <typename T>
Var<T> make_node(Tensor<T> value, std::vector<Var<T>> parents,
                 std::function<void(Node<T>&)> backward_fn) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  for (const auto& p : parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return n;
}

template <typename T>
void backward(const Var<T>& root) {
  if (root->value.numel() != 1) throw ShapeError("backward: root must be a scalar");
  if (!root->requires_grad) return;

  // Iterative post-order DFS for a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (!n->backward_fn) continue;
    n->ensure_grad();
    for (auto& p : n->parents) {
      if (p->requires_grad) p->ensure_grad();
    }
    n->backward_fn(*n);
  }
}

#define BEVTRACK_INSTANTIATE(T)                                                              \
  template struct Tensor<T>;                                                                 \
  template Var<T> constant<T>(Tensor<T>);                                                    \
  template Var<T> parameter<T>(Tensor<T>);                                                   \
  template Var<T> make_node<T>(Tensor<T>, std::vector<Var<T>>, std::function<void(Node<T>&)>); \
  template void backward<T>(const Var<T>&);

BEVTRACK_INSTANTIATE(float)
BEVTRACK_INSTANTIATE(double)

#undef BEVTRACK_INSTANTIATE

}  // namespace bevtrack::net
