#include "stfl/models/inflate.hpp"

#include <algorithm>
#include <string>

namespace stfl {

std::size_t midplanes(std::size_t n_prev, std::size_t n_out, std::size_t t, std::size_t d) {
  if (n_prev == 0 || n_out == 0 || t == 0 || d == 0) throw ConfigError("midplanes: arguments must be positive");
  const std::size_t full = t * d * d * n_prev * n_out;
  return std::max<std::size_t>(1, full / (d * d * n_prev + t * n_out));
}

template <class T>
Tensor<T> inflate_2d_to_3d(const Tensor<T>& filter2d, std::size_t t) {
  require_rank(filter2d, 4, "inflate_2d_to_3d filter");
  if (t == 0) throw ConfigError("inflate_2d_to_3d: temporal extent must be >= 1");
  const std::size_t co = filter2d.dim(0), ci = filter2d.dim(1), kh = filter2d.dim(2), kw = filter2d.dim(3);
  const std::size_t plane = kh * kw;
  Tensor<T> out({co, ci, t, kh, kw});
  const double inv = 1.0 / static_cast<double>(t);
  for (std::size_t f = 0; f < co * ci; ++f) {
    const T* src = filter2d.raw() + f * plane;
    for (std::size_t s = 0; s < t; ++s) {
      T* dst = out.raw() + (f * t + s) * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<T>(static_cast<double>(src[i]) * inv);
    }
  }
  return out;
}

template Tensor<float> inflate_2d_to_3d(const Tensor<float>&, std::size_t);
template Tensor<double> inflate_2d_to_3d(const Tensor<double>&, std::size_t);

}  // namespace stfl
