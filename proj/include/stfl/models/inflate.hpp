#pragma once

#include <cstddef>

#include "stfl/tensor.hpp"

namespace stfl {

/// Largest M with params(1xdxd into M) + params(txtx1 from M) <= params(txdxd):
/// floor(t d^2 N_prev N_out / (d^2 N_prev + t N_out)).
std::size_t midplanes(std::size_t n_prev, std::size_t n_out, std::size_t t = 3, std::size_t d = 3);

/// (C', C, d, d) -> (C', C, t, d, d) with every temporal slice equal to filter / t.
template <class T>
Tensor<T> inflate_2d_to_3d(const Tensor<T>& filter2d, std::size_t t);

}  // namespace stfl
