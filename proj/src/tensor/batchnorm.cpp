#include "stfl/ops/batchnorm.hpp"

#include <cmath>
#include <string>

namespace stfl {

namespace {

struct Layout {
  std::size_t n, c, inner;
};

Layout layout_of(const Shape& s) {
  if (s.size() < 2) throw DimensionError("batchnorm: expected (N,C,...) input, got " + shape_str(s));
  std::size_t inner = 1;
  for (std::size_t i = 2; i < s.size(); ++i) inner *= s[i];
  return {s[0], s[1], inner};
}

}  // namespace

template <class T>
BatchNormForward<T> batchnorm_forward(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                                      NormMode mode, Tensor<T>& running_mean, Tensor<T>& running_var,
                                      const BatchNormOptions& options) {
  const Layout L = layout_of(input.shape());
  const Shape channel_shape{L.c};
  if (gamma.shape() != channel_shape || beta.shape() != channel_shape) {
    throw DimensionError("batchnorm: gamma/beta must have length " + std::to_string(L.c));
  }
  if (running_mean.shape() != channel_shape || running_var.shape() != channel_shape) {
    throw DimensionError("batchnorm: running statistics must have length " + std::to_string(L.c));
  }
  const std::size_t m = L.n * L.inner;
  if (mode == NormMode::train && m == 1 && options.epsilon == 0.0) {
    throw NumericError("batchnorm: single-element normalization set with epsilon 0");
  }

  BatchNormForward<T> result{Tensor<T>(input.shape()), BatchNormContext<T>{mode, Tensor<T>(input.shape()), {}, gamma}};
  result.context.inv_std.resize(L.c);
  const T* x = input.raw();
  T* y = result.output.raw();
  T* xhat = result.context.normalized.raw();

  for (std::size_t c = 0; c < L.c; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (mode == NormMode::train) {
      for (std::size_t n = 0; n < L.n; ++n) {
        const T* p = x + (n * L.c + c) * L.inner;
        for (std::size_t i = 0; i < L.inner; ++i) mean += static_cast<double>(p[i]);
      }
      mean /= static_cast<double>(m);
      for (std::size_t n = 0; n < L.n; ++n) {
        const T* p = x + (n * L.c + c) * L.inner;
        for (std::size_t i = 0; i < L.inner; ++i) {
          const double d = static_cast<double>(p[i]) - mean;
          var += d * d;
        }
      }
      var /= static_cast<double>(m);
      const double unbiased = m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
      running_mean[c] = static_cast<T>((1.0 - options.momentum) * static_cast<double>(running_mean[c]) +
                                       options.momentum * mean);
      running_var[c] = static_cast<T>((1.0 - options.momentum) * static_cast<double>(running_var[c]) +
                                      options.momentum * unbiased);
    } else {
      mean = static_cast<double>(running_mean[c]);
      var = static_cast<double>(running_var[c]);
    }
    const double denom = var + options.epsilon;
    if (!(denom > 0.0)) throw NumericError("batchnorm: zero variance with epsilon 0 in channel " + std::to_string(c));
    const double inv_std = 1.0 / std::sqrt(denom);
    result.context.inv_std[c] = inv_std;
    const double g = static_cast<double>(gamma[c]);
    const double b = static_cast<double>(beta[c]);
    for (std::size_t n = 0; n < L.n; ++n) {
      const std::size_t base = (n * L.c + c) * L.inner;
      for (std::size_t i = 0; i < L.inner; ++i) {
        const double h = (static_cast<double>(x[base + i]) - mean) * inv_std;
        xhat[base + i] = static_cast<T>(h);
        y[base + i] = static_cast<T>(g * h + b);
      }
    }
  }
  return result;
}

template <class T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormContext<T>& context) {
  if (!context.valid()) throw StateError("batchnorm_backward: missing forward context");
  if (grad_out.shape() != context.normalized.shape()) {
    throw DimensionError("batchnorm_backward: grad shape " + shape_str(grad_out.shape()) + " != input shape " +
                         shape_str(context.normalized.shape()));
  }
  const Layout L = layout_of(grad_out.shape());
  const double m = static_cast<double>(L.n * L.inner);
  BatchNormGrads<T> grads{Tensor<T>(grad_out.shape()), Tensor<T>({L.c}), Tensor<T>({L.c})};
  const T* dy = grad_out.raw();
  const T* xhat = context.normalized.raw();
  T* dx = grads.input.raw();

  for (std::size_t c = 0; c < L.c; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < L.n; ++n) {
      const std::size_t base = (n * L.c + c) * L.inner;
      for (std::size_t i = 0; i < L.inner; ++i) {
        const double d = static_cast<double>(dy[base + i]);
        sum_dy += d;
        sum_dy_xhat += d * static_cast<double>(xhat[base + i]);
      }
    }
    grads.gamma[c] = static_cast<T>(sum_dy_xhat);
    grads.beta[c] = static_cast<T>(sum_dy);
    const double scale = static_cast<double>(context.gamma[c]) * context.inv_std[c];
    for (std::size_t n = 0; n < L.n; ++n) {
      const std::size_t base = (n * L.c + c) * L.inner;
      for (std::size_t i = 0; i < L.inner; ++i) {
        const double d = static_cast<double>(dy[base + i]);
        if (context.mode == NormMode::eval) {
          dx[base + i] = static_cast<T>(scale * d);
        } else {
          const double h = static_cast<double>(xhat[base + i]);
          dx[base + i] = static_cast<T>(scale * (d - sum_dy / m - h * sum_dy_xhat / m));
        }
      }
    }
  }
  return grads;
}

template BatchNormForward<float> batchnorm_forward(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                                   NormMode, Tensor<float>&, Tensor<float>&, const BatchNormOptions&);
template BatchNormForward<double> batchnorm_forward(const Tensor<double>&, const Tensor<double>&,
                                                    const Tensor<double>&, NormMode, Tensor<double>&,
                                                    Tensor<double>&, const BatchNormOptions&);
template BatchNormGrads<float> batchnorm_backward(const Tensor<float>&, const BatchNormContext<float>&);
template BatchNormGrads<double> batchnorm_backward(const Tensor<double>&, const BatchNormContext<double>&);

}  // namespace stfl
