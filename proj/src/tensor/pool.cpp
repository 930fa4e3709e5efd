#include "stfl/ops/pool.hpp"

#include <limits>
#include <string>

namespace stfl {

Shape pool3d_output_shape(const Shape& input, const Pool3dSpec& spec) {
  if (input.size() != 5) throw DimensionError("pool3d: expected (N,C,T,H,W) input, got " + shape_str(input));
  if (spec.kind == PoolKind::global_avg) return {input[0], input[1], 1, 1, 1};
  const Extent3& k = spec.window;
  const Extent3& s = spec.stride;
  if (k.t == 0 || k.h == 0 || k.w == 0 || s.t == 0 || s.h == 0 || s.w == 0) {
    throw DimensionError("pool3d: window and stride extents must be >= 1");
  }
  return {input[0], input[1], window_output_extent(input[2], k.t, s.t, spec.padding.t, "T"),
          window_output_extent(input[3], k.h, s.h, spec.padding.h, "H"),
          window_output_extent(input[4], k.w, s.w, spec.padding.w, "W")};
}

namespace {
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
}

template <class T>
Pool3dForward<T> pool3d_forward(const Tensor<T>& input, const Pool3dSpec& spec) {
  const Shape out_shape = pool3d_output_shape(input.shape(), spec);
  Pool3dForward<T> result{Tensor<T>(out_shape), Pool3dContext<T>{spec, input.shape(), out_shape, {}}};
  const std::size_t N = input.dim(0), C = input.dim(1), T_ = input.dim(2), H = input.dim(3), W = input.dim(4);
  const std::size_t planes = N * C;
  const std::size_t vol = T_ * H * W;
  const T* in = input.raw();
  T* out = result.output.raw();

  if (spec.kind == PoolKind::global_avg) {
    for (std::size_t p = 0; p < planes; ++p) {
      double sum = 0.0;
      for (std::size_t i = 0; i < vol; ++i) sum += static_cast<double>(in[p * vol + i]);
      out[p] = static_cast<T>(sum / static_cast<double>(vol));
    }
    return result;
  }

  const std::size_t To = out_shape[2], Ho = out_shape[3], Wo = out_shape[4];
  const Extent3& k = spec.window;
  const Extent3& s = spec.stride;
  const Extent3& pad = spec.padding;
  const bool is_max = spec.kind == PoolKind::max;
  if (is_max) result.context.argmax.assign(result.output.numel(), kNone);
  const double inv_count = 1.0 / static_cast<double>(k.volume());

  std::size_t o = 0;
  for (std::size_t p = 0; p < planes; ++p) {
    const T* plane = in + p * vol;
    for (std::size_t ot = 0; ot < To; ++ot) {
      for (std::size_t oh = 0; oh < Ho; ++oh) {
        for (std::size_t ow = 0; ow < Wo; ++ow, ++o) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_at = kNone;
          double sum = 0.0;
          for (std::size_t dt = 0; dt < k.t; ++dt) {
            const long t = static_cast<long>(ot * s.t + dt) - static_cast<long>(pad.t);
            if (t < 0 || t >= static_cast<long>(T_)) continue;
            for (std::size_t dh = 0; dh < k.h; ++dh) {
              const long h = static_cast<long>(oh * s.h + dh) - static_cast<long>(pad.h);
              if (h < 0 || h >= static_cast<long>(H)) continue;
              for (std::size_t dw = 0; dw < k.w; ++dw) {
                const long w = static_cast<long>(ow * s.w + dw) - static_cast<long>(pad.w);
                if (w < 0 || w >= static_cast<long>(W)) continue;
                const std::size_t off = (static_cast<std::size_t>(t) * H + static_cast<std::size_t>(h)) * W +
                                        static_cast<std::size_t>(w);
                const double v = static_cast<double>(plane[off]);
                sum += v;
                if (v > best) {
                  best = v;
                  best_at = p * vol + off;
                }
              }
            }
          }
          if (is_max) {
            out[o] = best_at == kNone ? T{0} : static_cast<T>(best);
            result.context.argmax[o] = best_at;
          } else {
            out[o] = static_cast<T>(sum * inv_count);
          }
        }
      }
    }
  }
  return result;
}

template <class T>
Tensor<T> pool3d_backward(const Tensor<T>& grad_out, const Pool3dContext<T>& context) {
  if (!context.valid()) throw StateError("pool3d_backward: missing forward context");
  if (grad_out.shape() != context.output_shape) {
    throw DimensionError("pool3d_backward: grad shape " + shape_str(grad_out.shape()) + " != output shape " +
                         shape_str(context.output_shape));
  }
  const Shape& in_shape = context.input_shape;
  const std::size_t N = in_shape[0], C = in_shape[1], T_ = in_shape[2], H = in_shape[3], W = in_shape[4];
  const std::size_t vol = T_ * H * W;
  std::vector<double> grad(N * C * vol, 0.0);
  const T* go = grad_out.raw();
  const Pool3dSpec& spec = context.spec;

  if (spec.kind == PoolKind::global_avg) {
    const double inv = 1.0 / static_cast<double>(vol);
    for (std::size_t p = 0; p < N * C; ++p) {
      const double g = static_cast<double>(go[p]) * inv;
      for (std::size_t i = 0; i < vol; ++i) grad[p * vol + i] = g;
    }
  } else if (spec.kind == PoolKind::max) {
    for (std::size_t o = 0; o < grad_out.numel(); ++o) {
      if (context.argmax[o] != kNone) grad[context.argmax[o]] += static_cast<double>(go[o]);
    }
  } else {
    const std::size_t To = context.output_shape[2], Ho = context.output_shape[3], Wo = context.output_shape[4];
    const Extent3& k = spec.window;
    const Extent3& s = spec.stride;
    const Extent3& pad = spec.padding;
    const double inv_count = 1.0 / static_cast<double>(k.volume());
    std::size_t o = 0;
    for (std::size_t p = 0; p < N * C; ++p) {
      double* plane = grad.data() + p * vol;
      for (std::size_t ot = 0; ot < To; ++ot) {
        for (std::size_t oh = 0; oh < Ho; ++oh) {
          for (std::size_t ow = 0; ow < Wo; ++ow, ++o) {
            const double g = static_cast<double>(go[o]) * inv_count;
            for (std::size_t dt = 0; dt < k.t; ++dt) {
              const long t = static_cast<long>(ot * s.t + dt) - static_cast<long>(pad.t);
              if (t < 0 || t >= static_cast<long>(T_)) continue;
              for (std::size_t dh = 0; dh < k.h; ++dh) {
                const long h = static_cast<long>(oh * s.h + dh) - static_cast<long>(pad.h);
                if (h < 0 || h >= static_cast<long>(H)) continue;
                for (std::size_t dw = 0; dw < k.w; ++dw) {
                  const long w = static_cast<long>(ow * s.w + dw) - static_cast<long>(pad.w);
                  if (w < 0 || w >= static_cast<long>(W)) continue;
                  plane[(static_cast<std::size_t>(t) * H + static_cast<std::size_t>(h)) * W +
                        static_cast<std::size_t>(w)] += g;
                }
              }
            }
          }
        }
      }
    }
  }
  return Tensor<T>(in_shape, std::vector<T>(grad.begin(), grad.end()));
}

template Pool3dForward<float> pool3d_forward(const Tensor<float>&, const Pool3dSpec&);
template Pool3dForward<double> pool3d_forward(const Tensor<double>&, const Pool3dSpec&);
template Tensor<float> pool3d_backward(const Tensor<float>&, const Pool3dContext<float>&);
template Tensor<double> pool3d_backward(const Tensor<double>&, const Pool3dContext<double>&);

}  // namespace stfl
