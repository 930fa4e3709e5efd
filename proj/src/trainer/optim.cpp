#include "stfl/trainer/optim.hpp"

#include <cmath>

#include "stfl/error.hpp"

namespace stfl {

void sgd_step(std::span<double> weights, std::span<const double> grads, std::span<double> velocity,
              const SgdOptions& o) {
  if (weights.size() != grads.size() || weights.size() != velocity.size()) {
    throw DimensionError("sgd_step: weights, grads and velocity must have equal lengths");
  }
  for (double g : grads)
    if (!std::isfinite(g)) throw NumericError("sgd_step: non-finite gradient");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    velocity[i] = o.momentum * velocity[i] + grads[i] + o.weight_decay * weights[i];
    weights[i] -= o.lr * velocity[i];
  }
}

template <class T>
void Sgd<T>::step(const SgdOptions& o) {
  if (velocity_.empty()) {
    for (const auto* p : params_) velocity_.emplace_back(p->value.shape());
  }
  if (velocity_.size() != params_.size()) throw StateError("sgd: velocity buffers do not match parameters");
  for (const auto* p : params_) {
    if (p->grad.shape() != p->value.shape()) throw StateError("sgd: missing gradient for '" + p->name + "'");
    if (!p->grad.all_finite()) throw NumericError("sgd: non-finite gradient in '" + p->name + "'");
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    T* w = params_[k]->value.raw();
    const T* g = params_[k]->grad.raw();
    T* v = velocity_[k].raw();
    for (std::size_t i = 0; i < velocity_[k].numel(); ++i) {
      const double vi = o.momentum * static_cast<double>(v[i]) + static_cast<double>(g[i]) +
                        o.weight_decay * static_cast<double>(w[i]);
      v[i] = static_cast<T>(vi);
      w[i] = static_cast<T>(static_cast<double>(w[i]) - o.lr * vi);
    }
  }
}

template class Sgd<float>;
template class Sgd<double>;

}  // namespace stfl
