#pragma once

#include <span>
#include <vector>

#include "stfl/models/layers.hpp"

namespace stfl {

struct SgdOptions {
  double lr = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0005;
};

/// Scalar form: g' = g + wd*w; v = m*v + g'; w = w - lr*v, elementwise.
/// NumericError on a non-finite gradient, before anything is modified.
void sgd_step(std::span<double> weights, std::span<const double> grads, std::span<double> velocity,
              const SgdOptions& options);

/// Momentum buffers for a fixed list of parameters, created zeroed on first use.
template <class T>
class Sgd {
 public:
  explicit Sgd(std::vector<Parameter<T>*> params) : params_(std::move(params)) {}
  void step(const SgdOptions& options);
  std::vector<Tensor<T>>& velocity() noexcept { return velocity_; }
  const std::vector<Parameter<T>*>& params() const noexcept { return params_; }

 private:
  std::vector<Parameter<T>*> params_;
  std::vector<Tensor<T>> velocity_;
};

}  // namespace stfl
