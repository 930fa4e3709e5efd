#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "stfl/tensor.hpp"

namespace stfl {

/// Extents along (time, height, width).
struct Extent3 {
  std::size_t t = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t volume() const noexcept { return t * h * w; }
  friend bool operator==(const Extent3&, const Extent3&) = default;
};

struct Conv3dSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  Extent3 kernel{3, 3, 3};
  Extent3 stride{1, 1, 1};
  Extent3 padding{0, 0, 0};
  bool has_bias = false;

  /// (out_channels, in_channels, k_t, k_h, k_w)
  Shape weight_shape() const {
    return {out_channels, in_channels, kernel.t, kernel.h, kernel.w};
  }
  std::size_t weight_count() const { return out_channels * in_channels * kernel.volume(); }
  void validate() const;
};

/// floor((in + 2p - k) / s) + 1, throwing DimensionError naming `axis` when
/// the result is not positive.
std::size_t window_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                 std::size_t padding, const char* axis);

/// Output shape for a (N, C, T, H, W) input; validates channel count.
Shape conv3d_output_shape(const Shape& input, const Conv3dSpec& spec);

template <class T>
struct Conv3dContext {
  Conv3dSpec spec;
  Tensor<T> input;
  Tensor<T> weights;

  bool valid() const noexcept { return !input.empty() && !weights.empty(); }
};

template <class T>
struct Conv3dForward {
  Tensor<T> output;
  Conv3dContext<T> context;
};

template <class T>
struct Conv3dGrads {
  Tensor<T> input;
  Tensor<T> weights;
  std::optional<Tensor<T>> bias;
};

/// Zero-padded 3D cross-correlation (no kernel flip), double accumulation.
template <class T>
Tensor<T> conv3d(const Tensor<T>& input, const Conv3dSpec& spec, const Tensor<T>& weights,
                 const Tensor<T>* bias = nullptr);

/// As conv3d, also returning the context needed by conv3d_backward.
template <class T>
Conv3dForward<T> conv3d_forward(const Tensor<T>& input, const Conv3dSpec& spec,
                                const Tensor<T>& weights, const Tensor<T>* bias = nullptr);

template <class T>
Conv3dGrads<T> conv3d_backward(const Tensor<T>& grad_out, const Conv3dContext<T>& context);

}  // namespace stfl
