#include "stfl/ops/dense.hpp"

#include <string>
#include <vector>

#include "stfl/ops/gemm.hpp"

namespace stfl {

template <class T>
Tensor<T> relu(const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.numel(); ++i) out[i] = input[i] > T{0} ? input[i] : T{0};
  return out;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& input) {
  if (grad_out.shape() != input.shape()) throw DimensionError("relu_backward: shape mismatch");
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.numel(); ++i) out[i] = input[i] > T{0} ? grad_out[i] : T{0};
  return out;
}

namespace {

template <class T>
void check_linear(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>* bias) {
  require_rank(input, 2, "linear input");
  require_rank(weights, 2, "linear weights");
  if (input.dim(1) != weights.dim(1)) {
    throw DimensionError("linear: inner dimension mismatch, input has " + std::to_string(input.dim(1)) +
                         " features but weights expect " + std::to_string(weights.dim(1)));
  }
  if (bias != nullptr && bias->shape() != Shape{weights.dim(0)}) {
    throw DimensionError("linear: bias must have length " + std::to_string(weights.dim(0)));
  }
}

template <class T>
std::vector<double> to_double(const Tensor<T>& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

}  // namespace

template <class T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>* bias) {
  check_linear(input, weights, bias);
  const std::size_t N = input.dim(0), F = input.dim(1), Fo = weights.dim(0);
  const std::vector<double> x = to_double(input);
  const std::vector<double> w = to_double(weights);
  std::vector<double> y(N * Fo, 0.0);
  gemm_accumulate(MatrixView::row_major(x.data(), N, F), MatrixView::transposed(w.data(), F, Fo), y.data(), Fo);
  Tensor<T> out({N, Fo});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t o = 0; o < Fo; ++o) {
      const double b = bias != nullptr ? static_cast<double>((*bias)[o]) : 0.0;
      out[n * Fo + o] = static_cast<T>(y[n * Fo + o] + b);
    }
  }
  return out;
}

template <class T>
LinearForward<T> linear_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>* bias) {
  Tensor<T> out = linear(input, weights, bias);
  return {std::move(out), LinearContext<T>{input, weights, bias != nullptr}};
}

template <class T>
LinearGrads<T> linear_backward(const Tensor<T>& grad_out, const LinearContext<T>& context) {
  if (!context.valid()) throw StateError("linear_backward: missing forward context");
  const std::size_t N = context.input.dim(0), F = context.input.dim(1), Fo = context.weights.dim(0);
  if (grad_out.shape() != Shape{N, Fo}) {
    throw DimensionError("linear_backward: grad shape " + shape_str(grad_out.shape()) + " != (" +
                         std::to_string(N) + "," + std::to_string(Fo) + ")");
  }
  const std::vector<double> x = to_double(context.input);
  const std::vector<double> w = to_double(context.weights);
  const std::vector<double> g = to_double(grad_out);
  std::vector<double> dx(N * F, 0.0);
  std::vector<double> dw(Fo * F, 0.0);
  gemm_accumulate(MatrixView::row_major(g.data(), N, Fo), MatrixView::row_major(w.data(), Fo, F), dx.data(), F);
  gemm_accumulate(MatrixView::transposed(g.data(), Fo, N), MatrixView::row_major(x.data(), N, F), dw.data(), F);
  LinearGrads<T> grads{Tensor<T>({N, F}, std::vector<T>(dx.begin(), dx.end())),
                       Tensor<T>({Fo, F}, std::vector<T>(dw.begin(), dw.end())), std::nullopt};
  if (context.has_bias) {
    Tensor<T> db({Fo});
    for (std::size_t o = 0; o < Fo; ++o) {
      double s = 0.0;
      for (std::size_t n = 0; n < N; ++n) s += g[n * Fo + o];
      db[o] = static_cast<T>(s);
    }
    grads.bias = std::move(db);
  }
  return grads;
}

template Tensor<float> relu(const Tensor<float>&);
template Tensor<double> relu(const Tensor<double>&);
template Tensor<float> relu_backward(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> relu_backward(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> linear(const Tensor<float>&, const Tensor<float>&, const Tensor<float>*);
template Tensor<double> linear(const Tensor<double>&, const Tensor<double>&, const Tensor<double>*);
template LinearForward<float> linear_forward(const Tensor<float>&, const Tensor<float>&, const Tensor<float>*);
template LinearForward<double> linear_forward(const Tensor<double>&, const Tensor<double>&, const Tensor<double>*);
template LinearGrads<float> linear_backward(const Tensor<float>&, const LinearContext<float>&);
template LinearGrads<double> linear_backward(const Tensor<double>&, const LinearContext<double>&);

}  // namespace stfl
