#pragma once

#include <span>
#include <vector>

#include "stfl/tensor.hpp"

namespace stfl {

template <class T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad_logits;
};

/// Mean over samples of w[y] * -log softmax(logits)[y].
template <class T>
LossResult<T> weighted_softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels,
                                             std::span<const double> class_weights);

/// Row-wise softmax of an (N, K) tensor.
template <class T>
Tensor<T> softmax(const Tensor<T>& logits);

}  // namespace stfl
