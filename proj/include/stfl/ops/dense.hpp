#pragma once

#include <optional>

#include "stfl/tensor.hpp"

namespace stfl {

template <class T>
Tensor<T> relu(const Tensor<T>& input);

/// Gradient of relu given its forward input (zero where input <= 0).
template <class T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& input);

template <class T>
struct LinearContext {
  Tensor<T> input;
  Tensor<T> weights;
  bool has_bias = false;

  bool valid() const noexcept { return !input.empty(); }
};

template <class T>
struct LinearForward {
  Tensor<T> output;
  LinearContext<T> context;
};

template <class T>
struct LinearGrads {
  Tensor<T> input;
  Tensor<T> weights;
  std::optional<Tensor<T>> bias;
};

/// input (N, F) x weights (F', F) -> (N, F'), plus an optional bias (F').
template <class T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>* bias = nullptr);

template <class T>
LinearForward<T> linear_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>* bias = nullptr);

template <class T>
LinearGrads<T> linear_backward(const Tensor<T>& grad_out, const LinearContext<T>& context);

}  // namespace stfl
