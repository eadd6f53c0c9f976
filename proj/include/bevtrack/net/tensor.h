#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace bevtrack::net {

template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, T fill = T(0));
  Tensor(std::vector<int> s, std::vector<T> values);

  std::size_t numel() const { return data.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
  std::size_t rank() const { return shape.size(); }
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

template <typename T>
struct Node;

template <typename T>
using Var = std::shared_ptr<Node<T>>;

// A value in the computation graph. Leaves with requires_grad are parameters;
// interior nodes keep their parents and a backward closure only when some
// parent requires a gradient.
template <typename T>
struct Node {
  Tensor<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<Var<T>> parents;
  std::function<void(Node<T>&)> backward_fn;

  std::vector<T>& ensure_grad() {
    if (grad.size() != value.numel()) grad.assign(value.numel(), T(0));
    return grad;
  }
  const std::vector<int>& shape() const { return value.shape; }
};

template <typename T>
Var<T> constant(Tensor<T> value);

template <typename T>
Var<T> parameter(Tensor<T> value);

// Builds a node; the closure and parents are dropped when no parent needs a
// gradient so inference graphs are freed eagerly.
template <typename T>
Var<T> make_node(Tensor<T> value, std::vector<Var<T>> parents,
                 std::function<void(Node<T>&)> backward_fn);

// Reverse-mode sweep from a scalar root (seed gradient 1).
template <typename T>
void backward(const Var<T>& root);

}  // namespace bevtrack::net
