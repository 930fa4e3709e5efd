#include "stfl/ops/gemm.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "stfl/error.hpp"

namespace stfl {

namespace {

#if defined(__AVX512F__)
constexpr std::size_t kVec = 8;
constexpr std::size_t kMR = 8;
#else
constexpr std::size_t kVec = 4;
constexpr std::size_t kMR = 6;
#endif
typedef double vec_t __attribute__((vector_size(kVec * sizeof(double))));

constexpr std::size_t kNR = 2 * kVec;
constexpr std::size_t kKC = 256;
constexpr std::size_t kMC = 16 * kMR;
constexpr std::size_t kNC = 4096;

void pack_a(const MatrixView& a, std::size_t i0, std::size_t mc, std::size_t k0, std::size_t kc,
            double* dst) {
  for (std::size_t ip = 0; ip < mc; ip += kMR) {
    const std::size_t m = std::min(kMR, mc - ip);
    for (std::size_t k = 0; k < kc; ++k) {
      std::size_t r = 0;
      for (; r < m; ++r) *dst++ = a(i0 + ip + r, k0 + k);
      for (; r < kMR; ++r) *dst++ = 0.0;
    }
  }
}

void pack_b(const MatrixView& b, std::size_t k0, std::size_t kc, std::size_t j0, std::size_t nc,
            double* dst) {
  for (std::size_t jp = 0; jp < nc; jp += kNR) {
    const std::size_t n = std::min(kNR, nc - jp);
    if (b.col_stride == 1 && n == kNR) {
      for (std::size_t k = 0; k < kc; ++k) {
        const double* src = b.data + static_cast<std::ptrdiff_t>(k0 + k) * b.row_stride +
                            static_cast<std::ptrdiff_t>(j0 + jp);
        std::memcpy(dst, src, kNR * sizeof(double));
        dst += kNR;
      }
      continue;
    }
    for (std::size_t k = 0; k < kc; ++k) {
      std::size_t c = 0;
      for (; c < n; ++c) *dst++ = b(k0 + k, j0 + jp + c);
      for (; c < kNR; ++c) *dst++ = 0.0;
    }
  }
}

inline vec_t load(const double* p) {
  vec_t v;
  std::memcpy(&v, p, sizeof(vec_t));
  return v;
}

inline void store(double* p, vec_t v) { std::memcpy(p, &v, sizeof(vec_t)); }

// b advances by ldb per k step: kNR for packed panels, the source row stride
// when B is read in place.
void micro_kernel(std::size_t kc, const double* __restrict a, const double* __restrict b,
                  std::size_t ldb, double* c, std::size_t ldc, std::size_t m, std::size_t n) {
  vec_t acc[kMR][2];
#pragma GCC unroll 8
  for (std::size_t r = 0; r < kMR; ++r) {
    acc[r][0] = vec_t{};
    acc[r][1] = vec_t{};
  }
  for (std::size_t k = 0; k < kc; ++k) {
    const vec_t b0 = load(b);
    const vec_t b1 = load(b + kVec);
#pragma GCC unroll 8
    for (std::size_t r = 0; r < kMR; ++r) {
      const vec_t ar = vec_t{} + a[r];
      acc[r][0] += ar * b0;
      acc[r][1] += ar * b1;
    }
    a += kMR;
    b += ldb;
  }
  if (m == kMR && n == kNR) {
#pragma GCC unroll 8
    for (std::size_t r = 0; r < kMR; ++r) {
      double* row = c + r * ldc;
      store(row, load(row) + acc[r][0]);
      store(row + kVec, load(row + kVec) + acc[r][1]);
    }
    return;
  }
  alignas(64) double tile[kMR][kNR];
  for (std::size_t r = 0; r < kMR; ++r) {
    store(&tile[r][0], acc[r][0]);
    store(&tile[r][kVec], acc[r][1]);
  }
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < n; ++j) c[r * ldc + j] += tile[r][j];
  }
}

}  // namespace

void gemm_accumulate(const MatrixView& a, const MatrixView& b, double* c, std::size_t ldc) {
  if (a.cols != b.rows) throw DimensionError("gemm: inner extents disagree");
  const std::size_t M = a.rows;
  const std::size_t K = a.cols;
  const std::size_t N = b.cols;
  if (M == 0 || N == 0 || K == 0) return;

  thread_local std::vector<double> packed_a;
  thread_local std::vector<double> packed_b;
  packed_a.resize(kMC * kKC);

  for (std::size_t jc = 0; jc < N; jc += kNC) {
    const std::size_t nc = std::min(kNC, N - jc);
    const std::size_t nc_padded = (nc + kNR - 1) / kNR * kNR;
    for (std::size_t pc = 0; pc < K; pc += kKC) {
      const std::size_t kc = std::min(kKC, K - pc);
      // With a single row block the packed B panel would be used once, so
      // full-width column panels are read straight from a contiguous B.
      const bool direct_b = M <= kMC && b.col_stride == 1;
      if (!direct_b) {
        packed_b.resize(nc_padded * kc);
        pack_b(b, pc, kc, jc, nc, packed_b.data());
      }
      for (std::size_t ic = 0; ic < M; ic += kMC) {
        const std::size_t mc = std::min(kMC, M - ic);
        pack_a(a, ic, mc, pc, kc, packed_a.data());
        for (std::size_t jr = 0; jr < nc; jr += kNR) {
          const std::size_t n = std::min(kNR, nc - jr);
          const double* panel = nullptr;
          std::size_t ldb = kNR;
          if (!direct_b) {
            panel = packed_b.data() + jr * kc;
          } else if (n == kNR) {
            panel = b.data + static_cast<std::ptrdiff_t>(pc) * b.row_stride +
                    static_cast<std::ptrdiff_t>(jc + jr);
            ldb = static_cast<std::size_t>(b.row_stride);
          } else {
            packed_b.resize(kNR * kc);
            pack_b(b, pc, kc, jc + jr, n, packed_b.data());
            panel = packed_b.data();
          }
          for (std::size_t ir = 0; ir < mc; ir += kMR) {
            micro_kernel(kc, packed_a.data() + ir * kc, panel, ldb, c + (ic + ir) * ldc + jc + jr,
                         ldc, std::min(kMR, mc - ir), n);
          }
        }
      }
    }
  }
}

}  // namespace stfl
