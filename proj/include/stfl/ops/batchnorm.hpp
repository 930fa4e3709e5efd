#pragma once

#include <vector>

#include "stfl/tensor.hpp"

namespace stfl {

enum class NormMode { train, eval };

struct BatchNormOptions {
  double epsilon = 1e-5;
  double momentum = 0.1;
};

template <class T>
struct BatchNormContext {
  NormMode mode = NormMode::train;
  Tensor<T> normalized;         // x_hat, same shape as the input
  std::vector<double> inv_std;  // per channel
  Tensor<T> gamma;

  bool valid() const noexcept { return !normalized.empty(); }
};

template <class T>
struct BatchNormForward {
  Tensor<T> output;
  BatchNormContext<T> context;
};

template <class T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

/// Per-channel normalization of an (N, C, ...) tensor over every axis but C.
/// Train mode uses batch statistics (biased variance) and folds them into the
/// running estimates (unbiased variance); eval mode uses the running estimates.
template <class T>
BatchNormForward<T> batchnorm_forward(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                                      NormMode mode, Tensor<T>& running_mean, Tensor<T>& running_var,
                                      const BatchNormOptions& options = {});

template <class T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormContext<T>& context);

}  // namespace stfl
