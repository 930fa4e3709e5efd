#pragma once

#include <vector>

#include "stfl/ops/conv.hpp"
#include "stfl/tensor.hpp"

namespace stfl {

enum class PoolKind { max, avg, global_avg };

struct Pool3dSpec {
  PoolKind kind = PoolKind::max;
  Extent3 window{2, 2, 2};
  Extent3 stride{2, 2, 2};
  Extent3 padding{0, 0, 0};
};

/// Output shape for a (N, C, T, H, W) input. global_avg yields (N, C, 1, 1, 1).
Shape pool3d_output_shape(const Shape& input, const Pool3dSpec& spec);

template <class T>
struct Pool3dContext {
  Pool3dSpec spec;
  Shape input_shape;
  Shape output_shape;
  // Flat input offset of each output's maximum (max pooling only).
  std::vector<std::size_t> argmax;

  bool valid() const noexcept { return !input_shape.empty(); }
};

template <class T>
struct Pool3dForward {
  Tensor<T> output;
  Pool3dContext<T> context;
};

/// Max pooling ignores padded positions; average pooling counts them as zeros.
template <class T>
Pool3dForward<T> pool3d_forward(const Tensor<T>& input, const Pool3dSpec& spec);

template <class T>
Tensor<T> pool3d(const Tensor<T>& input, const Pool3dSpec& spec) {
  return pool3d_forward(input, spec).output;
}

template <class T>
Tensor<T> pool3d_backward(const Tensor<T>& grad_out, const Pool3dContext<T>& context);

}  // namespace stfl
