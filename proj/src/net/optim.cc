#include "bevtrack/net/optim.h"

#include <cmath>
#include <stdexcept>

#include "bevtrack/errors.h"

namespace bevtrack::net {

template <typename T>
Var<T> ParamStore<T>::add_weight(const std::string& name, std::vector<int> shape, int fan_in,
                                 std::mt19937_64& rng) {
  Tensor<T> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (auto& v : t.data) v = static_cast<T>(dist(rng));
  auto var = parameter<T>(std::move(t));
  entries_.push_back({name, var, std::vector<T>(var->value.numel(), T(0))});
  return var;
}

template <typename T>
Var<T> ParamStore<T>::add_constant_init(const std::string& name, std::vector<int> shape, T value) {
  auto var = parameter<T>(Tensor<T>(std::move(shape), value));
  entries_.push_back({name, var, std::vector<T>(var->value.numel(), T(0))});
  return var;
}

template <typename T>
const Var<T>& ParamStore<T>::get(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.var;
  }
  throw std::out_of_range("ParamStore: no parameter named " + name);
}

template <typename T>
std::size_t ParamStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.var->value.numel();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& e : entries_) e.var->grad.assign(e.var->value.numel(), T(0));
}

template <typename T>
void sgd_step(ParamStore<T>& store, double lr, double momentum) {
  for (auto& e : store.entries()) {
    if (e.var->grad.size() != e.var->value.numel()) {
      throw InvalidArgument("sgd_step: missing gradient for " + e.name);
    }
  }
  const T m = static_cast<T>(momentum);
  const T step = static_cast<T>(lr);
  for (auto& e : store.entries()) {
    auto& p = e.var->value.data;
    const auto& g = e.var->grad;
    for (std::size_t i = 0; i < p.size(); ++i) {
      e.momentum[i] = m * e.momentum[i] + g[i];
      p[i] -= step * e.momentum[i];
    }
  }
}

template <typename T>
double clip_grad_norm(ParamStore<T>& store, double max_norm) {
  double sq = 0.0;
  for (auto& e : store.entries()) {
    for (T g : e.var->grad) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const T f = static_cast<T>(max_norm / norm);
    for (auto& e : store.entries()) {
      for (T& g : e.var->grad) g *= f;
    }
  }
  return norm;
}

double lr_plateau_update(PlateauSchedule& sched, double validation_loss) {
  if (!sched.has_best) {
    sched.has_best = true;
    sched.best_loss = validation_loss;
    sched.stall_count = 0;
    return sched.lr;
  }
  if (validation_loss < sched.best_loss * (1.0 - sched.threshold)) {
    sched.best_loss = validation_loss;
    sched.stall_count = 0;
    return sched.lr;
  }
  ++sched.stall_count;
  if (sched.stall_count > sched.patience) {
    sched.lr /= sched.factor;
    sched.stall_count = 0;
  }
  return sched.lr;
}

template class ParamStore<float>;
template class ParamStore<double>;
template void sgd_step<float>(ParamStore<float>&, double, double);
template void sgd_step<double>(ParamStore<double>&, double, double);
template double clip_grad_norm<float>(ParamStore<float>&, double);
template double clip_grad_norm<double>(ParamStore<double>&, double);

}  // namespace bevtrack::net
