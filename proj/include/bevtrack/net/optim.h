#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bevtrack/net/tensor.h"

namespace bevtrack::net {

// Named parameters in declaration order, each with a momentum buffer.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Var<T> var;
    std::vector<T> momentum;
  };

  // He-normal initialised weight (std = sqrt(2 / fan_in)).
  Var<T> add_weight(const std::string& name, std::vector<int> shape, int fan_in, std::mt19937_64& rng);
  Var<T> add_constant_init(const std::string& name, std::vector<int> shape, T value);

  const Var<T>& get(const std::string& name) const;
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t scalar_count() const;

  void zero_grad();
  // Frozen stores build no backward graph, which keeps inference cheap.
  void set_requires_grad(bool on) {
    for (auto& e : entries_) e.var->requires_grad = on;
  }
  // Copies values (not momentum) from a store with identical names and shapes.
  template <typename U>
  void copy_values_from(const ParamStore<U>& other);

 private:
  std::vector<Entry> entries_;
};

// v <- m v + g ; p <- p - lr v. Throws InvalidArgument when any parameter has
// no gradient buffer.
template <typename T>
void sgd_step(ParamStore<T>& store, double lr, double momentum = 0.9);

// Scales all gradients so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
template <typename T>
double clip_grad_norm(ParamStore<T>& store, double max_norm);

struct PlateauSchedule {
  double lr = 1e-4;
  double factor = 10.0;
  int patience = 2;
  double threshold = 1e-4;  // relative improvement needed to reset the stall count
  double best_loss = 0.0;
  bool has_best = false;
  int stall_count = 0;
};

// Feeds one validation loss; returns the (possibly reduced) learning rate.
double lr_plateau_update(PlateauSchedule& sched, double validation_loss);

}  // namespace bevtrack::net

namespace bevtrack::net {

template <typename T>
template <typename U>
void ParamStore<T>::copy_values_from(const ParamStore<U>& other) {
  const auto& src = other.entries();
  if (src.size() != entries_.size()) throw std::runtime_error("copy_values_from: parameter count mismatch");
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto& dst = entries_[i];
    if (dst.name != src[i].name || dst.var->value.shape != src[i].var->value.shape) {
      throw std::runtime_error("copy_values_from: mismatch at " + dst.name);
    }
    for (std::size_t k = 0; k < dst.var->value.numel(); ++k) {
      dst.var->value.data[k] = static_cast<T>(src[i].var->value.data[k]);
    }
  }
}

}  // namespace bevtrack::net
