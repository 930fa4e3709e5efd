#pragma once

#include <cstddef>

namespace stfl {

/// Read-only strided view of a row-major or transposed double matrix.
struct MatrixView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::ptrdiff_t row_stride = 0;
  std::ptrdiff_t col_stride = 1;

  static MatrixView row_major(const double* data, std::size_t rows, std::size_t cols) {
    return {data, rows, cols, static_cast<std::ptrdiff_t>(cols), 1};
  }
  /// View of the transpose of a row-major (cols x rows) buffer.
  static MatrixView transposed(const double* data, std::size_t rows, std::size_t cols) {
    return {data, rows, cols, 1, static_cast<std::ptrdiff_t>(rows)};
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data[static_cast<std::ptrdiff_t>(i) * row_stride + static_cast<std::ptrdiff_t>(j) * col_stride];
  }
};

/// C += A * B where C is row-major with leading dimension ldc.
/// Cache-blocked with packed panels; results do not depend on thread count.
void gemm_accumulate(const MatrixView& a, const MatrixView& b, double* c, std::size_t ldc);

}  // namespace stfl
