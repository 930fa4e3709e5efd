#include "stfl/ops/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stfl {

template <class T>
Tensor<T> softmax(const Tensor<T>& logits) {
  require_rank(logits, 2, "softmax");
  const std::size_t N = logits.dim(0), K = logits.dim(1);
  Tensor<T> out(logits.shape());
  for (std::size_t n = 0; n < N; ++n) {
    double mx = static_cast<double>(logits[n * K]);
    for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, static_cast<double>(logits[n * K + k]));
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(static_cast<double>(logits[n * K + k]) - mx);
    for (std::size_t k = 0; k < K; ++k) {
      out[n * K + k] = static_cast<T>(std::exp(static_cast<double>(logits[n * K + k]) - mx) / z);
    }
  }
  return out;
}

template <class T>
LossResult<T> weighted_softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels,
                                             std::span<const double> class_weights) {
  require_rank(logits, 2, "cross entropy logits");
  const std::size_t N = logits.dim(0), K = logits.dim(1);
  if (labels.size() != N) {
    throw DimensionError("cross entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(N) +
                         " samples");
  }
  if (class_weights.size() != K) {
    throw DimensionError("cross entropy: expected " + std::to_string(K) + " class weights");
  }
  for (double w : class_weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw DataError("cross entropy: class weights must be positive");
  }
  LossResult<T> result{0.0, Tensor<T>(logits.shape())};
  for (std::size_t n = 0; n < N; ++n) {
    const int y = labels[n];
    if (y < 0 || static_cast<std::size_t>(y) >= K) {
      throw DataError("cross entropy: label " + std::to_string(y) + " at sample " + std::to_string(n) +
                      " outside {0.." + std::to_string(K - 1) + "}");
    }
    double mx = static_cast<double>(logits[n * K]);
    for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, static_cast<double>(logits[n * K + k]));
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(static_cast<double>(logits[n * K + k]) - mx);
    const double log_z = std::log(z) + mx;
    const double w = class_weights[static_cast<std::size_t>(y)];
    result.loss += w * (log_z - static_cast<double>(logits[n * K + static_cast<std::size_t>(y)]));
    for (std::size_t k = 0; k < K; ++k) {
      const double p = std::exp(static_cast<double>(logits[n * K + k]) - log_z);
      const double target = k == static_cast<std::size_t>(y) ? 1.0 : 0.0;
      result.grad_logits[n * K + k] = static_cast<T>(w * (p - target) / static_cast<double>(N));
    }
  }
  result.loss /= static_cast<double>(N);
  if (!std::isfinite(result.loss)) throw NumericError("cross entropy: non-finite loss");
  return result;
}

template Tensor<float> softmax(const Tensor<float>&);
template Tensor<double> softmax(const Tensor<double>&);
template LossResult<float> weighted_softmax_cross_entropy(const Tensor<float>&, std::span<const int>,
                                                          std::span<const double>);
template LossResult<double> weighted_softmax_cross_entropy(const Tensor<double>&, std::span<const int>,
                                                           std::span<const double>);

}  // namespace stfl
