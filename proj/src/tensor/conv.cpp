#include "stfl/ops/conv.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "stfl/ops/gemm.hpp"
#include "stfl/parallel.hpp"

namespace stfl {

void Conv3dSpec::validate() const {
  if (in_channels == 0 || out_channels == 0) throw DimensionError("conv3d: channel counts must be positive");
  if (kernel.t == 0 || kernel.h == 0 || kernel.w == 0) throw DimensionError("conv3d: kernel extents must be >= 1");
  if (stride.t == 0 || stride.h == 0 || stride.w == 0) throw DimensionError("conv3d: stride extents must be >= 1");
}

std::size_t window_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                 std::size_t padding, const char* axis) {
  const long span = static_cast<long>(in + 2 * padding) - static_cast<long>(kernel);
  if (span < 0) {
    throw DimensionError(std::string("non-positive output extent on axis ") + axis + " (input " +
                         std::to_string(in) + ", kernel " + std::to_string(kernel) + ", padding " +
                         std::to_string(padding) + ")");
  }
  return static_cast<std::size_t>(span) / stride + 1;
}

Shape conv3d_output_shape(const Shape& input, const Conv3dSpec& spec) {
  spec.validate();
  if (input.size() != 5) {
    throw DimensionError("conv3d: expected (N,C,T,H,W) input, got " + shape_str(input));
  }
  if (input[1] != spec.in_channels) {
    throw DimensionError("conv3d: channel axis C has extent " + std::to_string(input[1]) + ", expected " +
                         std::to_string(spec.in_channels));
  }
  return {input[0], spec.out_channels,
          window_output_extent(input[2], spec.kernel.t, spec.stride.t, spec.padding.t, "T"),
          window_output_extent(input[3], spec.kernel.h, spec.stride.h, spec.padding.h, "H"),
          window_output_extent(input[4], spec.kernel.w, spec.stride.w, spec.padding.w, "W")};
}

namespace {

struct Geometry {
  std::size_t n, c, t, h, w;
  std::size_t co, to, ho, wo;
  Extent3 k, s, p;

  std::size_t positions() const { return to * ho * wo; }
  std::size_t rows() const { return c * k.volume(); }
  std::size_t columns() const { return n * positions(); }
  std::size_t sample_size() const { return c * t * h * w; }
};

Geometry make_geometry(const Shape& in, const Shape& out, const Conv3dSpec& spec) {
  return {in[0], in[1], in[2], in[3], in[4], out[1], out[2], out[3], out[4], spec.kernel, spec.stride, spec.padding};
}

// Per output column: source sample offset and the (t, h, w) window origin.
struct ColumnIndex {
  std::vector<std::size_t> sample;
  std::vector<long> t0, h0, w0;
  std::vector<std::size_t> n, pos;

  void build(const Geometry& g, std::size_t j0, std::size_t count) {
    sample.resize(count);
    t0.resize(count);
    h0.resize(count);
    w0.resize(count);
    n.resize(count);
    pos.resize(count);
    const std::size_t P = g.positions();
    for (std::size_t jj = 0; jj < count; ++jj) {
      const std::size_t j = j0 + jj;
      const std::size_t ni = j / P;
      const std::size_t p = j % P;
      const std::size_t ot = p / (g.ho * g.wo);
      const std::size_t oh = (p / g.wo) % g.ho;
      const std::size_t ow = p % g.wo;
      n[jj] = ni;
      pos[jj] = p;
      sample[jj] = ni * g.sample_size();
      t0[jj] = static_cast<long>(ot * g.s.t) - static_cast<long>(g.p.t);
      h0[jj] = static_cast<long>(oh * g.s.h) - static_cast<long>(g.p.h);
      w0[jj] = static_cast<long>(ow * g.s.w) - static_cast<long>(g.p.w);
    }
  }
};

// Visits every (row, column) of the chunk's column matrix with the flat
// input offset, or skips entries that fall in the zero padding.
template <class Fn>
void for_each_tap(const Geometry& g, const ColumnIndex& idx, std::size_t count, Fn&& fn) {
  const std::size_t hw = g.h * g.w;
  const std::size_t thw = g.t * hw;
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < g.c; ++ci) {
    for (std::size_t dt = 0; dt < g.k.t; ++dt) {
      for (std::size_t dh = 0; dh < g.k.h; ++dh) {
        for (std::size_t dw = 0; dw < g.k.w; ++dw, ++row) {
          for (std::size_t jj = 0; jj < count; ++jj) {
            const long tt = idx.t0[jj] + static_cast<long>(dt);
            const long hh = idx.h0[jj] + static_cast<long>(dh);
            const long ww = idx.w0[jj] + static_cast<long>(dw);
            if (static_cast<std::size_t>(tt) >= g.t || static_cast<std::size_t>(hh) >= g.h ||
                static_cast<std::size_t>(ww) >= g.w) {
              continue;
            }
            fn(row, jj,
               idx.sample[jj] + ci * thw + static_cast<std::size_t>(tt) * hw +
                   static_cast<std::size_t>(hh) * g.w + static_cast<std::size_t>(ww));
          }
        }
      }
    }
  }
}

template <class T>
void im2col(const T* input, const Geometry& g, const ColumnIndex& idx, std::size_t count, double* col) {
  std::fill(col, col + g.rows() * count, 0.0);
  for_each_tap(g, idx, count, [&](std::size_t row, std::size_t jj, std::size_t off) {
    col[row * count + jj] = static_cast<double>(input[off]);
  });
}

void col2im(const double* col, const Geometry& g, const ColumnIndex& idx, std::size_t count, double* grad_in) {
  for_each_tap(g, idx, count, [&](std::size_t row, std::size_t jj, std::size_t off) {
    grad_in[off] += col[row * count + jj];
  });
}

std::size_t chunk_columns(std::size_t rows, std::size_t total) {
  constexpr std::size_t kBudget = std::size_t{1} << 18;
  const std::size_t j = std::max<std::size_t>(32, kBudget / std::max<std::size_t>(rows, 1));
  return std::min(j, total);
}

template <class T>
std::vector<double> to_double(const Tensor<T>& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

template <class T>
void check_operands(const Tensor<T>& input, const Conv3dSpec& spec, const Tensor<T>& weights,
                    const Tensor<T>* bias) {
  if (weights.shape() != spec.weight_shape()) {
    throw DimensionError("conv3d: weight shape " + shape_str(weights.shape()) + " != expected " +
                         shape_str(spec.weight_shape()));
  }
  if (spec.has_bias) {
    if (bias == nullptr || bias->shape() != Shape{spec.out_channels}) {
      throw DimensionError("conv3d: bias must have shape (" + std::to_string(spec.out_channels) + ")");
    }
  }
  (void)input;
}

template <class T>
Tensor<T> run_forward(const Tensor<T>& input, const Conv3dSpec& spec, const Tensor<T>& weights,
                      const Tensor<T>* bias) {
  const Shape out_shape = conv3d_output_shape(input.shape(), spec);
  check_operands(input, spec, weights, bias);
  const Geometry g = make_geometry(input.shape(), out_shape, spec);
  const std::vector<double> w = to_double(weights);
  Tensor<T> out(out_shape);

  const std::size_t K = g.rows();
  const std::size_t total = g.columns();
  const std::size_t J = chunk_columns(K, total);
  const std::size_t chunks = (total + J - 1) / J;
  const std::size_t P = g.positions();
  const T* in = input.raw();
  T* dst = out.raw();

  parallel_for(chunks, [&](std::size_t c) {
    thread_local ColumnIndex idx;
    thread_local std::vector<double> col;
    thread_local std::vector<double> acc;
    const std::size_t j0 = c * J;
    const std::size_t count = std::min(J, total - j0);
    idx.build(g, j0, count);
    col.resize(K * count);
    im2col(in, g, idx, count, col.data());
    acc.assign(g.co * count, 0.0);
    gemm_accumulate(MatrixView::row_major(w.data(), g.co, K), MatrixView::row_major(col.data(), K, count),
                    acc.data(), count);
    for (std::size_t o = 0; o < g.co; ++o) {
      const double b = spec.has_bias ? static_cast<double>((*bias)[o]) : 0.0;
      const double* row = acc.data() + o * count;
      for (std::size_t jj = 0; jj < count; ++jj) {
        dst[(idx.n[jj] * g.co + o) * P + idx.pos[jj]] = static_cast<T>(row[jj] + b);
      }
    }
  });
  return out;
}

}  // namespace

template <class T>
Tensor<T> conv3d(const Tensor<T>& input, const Conv3dSpec& spec, const Tensor<T>& weights,
                 const Tensor<T>* bias) {
  return run_forward(input, spec, weights, bias);
}

template <class T>
Conv3dForward<T> conv3d_forward(const Tensor<T>& input, const Conv3dSpec& spec, const Tensor<T>& weights,
                                const Tensor<T>* bias) {
  Tensor<T> out = run_forward(input, spec, weights, bias);
  return {std::move(out), Conv3dContext<T>{spec, input, weights}};
}

template <class T>
Conv3dGrads<T> conv3d_backward(const Tensor<T>& grad_out, const Conv3dContext<T>& context) {
  if (!context.valid()) throw StateError("conv3d_backward: missing forward context");
  const Conv3dSpec& spec = context.spec;
  const Shape out_shape = conv3d_output_shape(context.input.shape(), spec);
  if (grad_out.shape() != out_shape) {
    throw DimensionError("conv3d_backward: grad shape " + shape_str(grad_out.shape()) + " != output shape " +
                         shape_str(out_shape));
  }
  const Geometry g = make_geometry(context.input.shape(), out_shape, spec);
  const std::vector<double> w = to_double(context.weights);
  const std::size_t K = g.rows();
  const std::size_t total = g.columns();
  const std::size_t J = chunk_columns(K, total);
  const std::size_t P = g.positions();

  std::vector<double> grad_w(g.co * K, 0.0);
  std::vector<double> grad_b(g.co, 0.0);
  std::vector<double> grad_in(context.input.numel(), 0.0);
  std::vector<double> col;
  std::vector<double> gcol;
  std::vector<double> gbuf;
  ColumnIndex idx;
  const T* go = grad_out.raw();

  for (std::size_t j0 = 0; j0 < total; j0 += J) {
    const std::size_t count = std::min(J, total - j0);
    idx.build(g, j0, count);
    gbuf.resize(g.co * count);
    for (std::size_t o = 0; o < g.co; ++o) {
      double* row = gbuf.data() + o * count;
      double sum = 0.0;
      for (std::size_t jj = 0; jj < count; ++jj) {
        row[jj] = static_cast<double>(go[(idx.n[jj] * g.co + o) * P + idx.pos[jj]]);
        sum += row[jj];
      }
      grad_b[o] += sum;
    }
    col.resize(K * count);
    im2col(context.input.raw(), g, idx, count, col.data());
    gemm_accumulate(MatrixView::row_major(gbuf.data(), g.co, count), MatrixView::transposed(col.data(), count, K),
                    grad_w.data(), K);
    gcol.assign(K * count, 0.0);
    gemm_accumulate(MatrixView::transposed(w.data(), K, g.co), MatrixView::row_major(gbuf.data(), g.co, count),
                    gcol.data(), count);
    col2im(gcol.data(), g, idx, count, grad_in.data());
  }

  Conv3dGrads<T> grads{Tensor<T>(context.input.shape(), std::vector<T>(grad_in.begin(), grad_in.end())),
                       Tensor<T>(spec.weight_shape(), std::vector<T>(grad_w.begin(), grad_w.end())),
                       std::nullopt};
  if (spec.has_bias) {
    grads.bias = Tensor<T>({spec.out_channels}, std::vector<T>(grad_b.begin(), grad_b.end()));
  }
  return grads;
}

template Tensor<float> conv3d(const Tensor<float>&, const Conv3dSpec&, const Tensor<float>&, const Tensor<float>*);
template Tensor<double> conv3d(const Tensor<double>&, const Conv3dSpec&, const Tensor<double>&,
                               const Tensor<double>*);
template Conv3dForward<float> conv3d_forward(const Tensor<float>&, const Conv3dSpec&, const Tensor<float>&,
                                             const Tensor<float>*);
template Conv3dForward<double> conv3d_forward(const Tensor<double>&, const Conv3dSpec&, const Tensor<double>&,
                                              const Tensor<double>*);
template Conv3dGrads<float> conv3d_backward(const Tensor<float>&, const Conv3dContext<float>&);
template Conv3dGrads<double> conv3d_backward(const Tensor<double>&, const Conv3dContext<double>&);

}  // namespace stfl
