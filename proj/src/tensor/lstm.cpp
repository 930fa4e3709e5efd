#include "stfl/ops/lstm.hpp"

#include <cmath>
#include <string>

#include "stfl/ops/gemm.hpp"

namespace stfl {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <class T>
std::vector<double> to_double(const Tensor<T>& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

template <class T>
Tensor<T> from_double(const Shape& shape, const std::vector<double>& v) {
  return Tensor<T>(shape, std::vector<T>(v.begin(), v.end()));
}

}  // namespace

template <class T>
LstmParams<T> LstmParams<T>::zeros(const LstmSpec& spec) {
  LstmParams<T> p;
  const std::size_t H = spec.hidden_size;
  for (std::size_t l = 0; l < spec.num_layers; ++l) {
    const std::size_t in = l == 0 ? spec.input_size : H;
    p.layers.push_back({Tensor<T>({4 * H, in}), Tensor<T>({4 * H, H}), Tensor<T>({4 * H}), Tensor<T>({4 * H})});
  }
  return p;
}

template <class T>
void LstmParams<T>::validate(const LstmSpec& spec) const {
  if (layers.size() != spec.num_layers) {
    throw DimensionError("lstm: expected " + std::to_string(spec.num_layers) + " layers of parameters, got " +
                         std::to_string(layers.size()));
  }
  const std::size_t H = spec.hidden_size;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::size_t in = l == 0 ? spec.input_size : H;
    const auto& p = layers[l];
    const std::string where = "lstm layer " + std::to_string(l);
    if (p.w_ih.shape() != Shape{4 * H, in}) throw DimensionError(where + ": w_ih shape " + shape_str(p.w_ih.shape()));
    if (p.w_hh.shape() != Shape{4 * H, H}) throw DimensionError(where + ": w_hh shape " + shape_str(p.w_hh.shape()));
    if (p.b_ih.shape() != Shape{4 * H}) throw DimensionError(where + ": b_ih shape " + shape_str(p.b_ih.shape()));
    if (p.b_hh.shape() != Shape{4 * H}) throw DimensionError(where + ": b_hh shape " + shape_str(p.b_hh.shape()));
  }
}

template <class T>
LstmForward<T> lstm_sequence(const Tensor<T>& inputs, const LstmSpec& spec, const LstmParams<T>& params,
                             const LstmState<T>* initial) {
  require_rank(inputs, 3, "lstm inputs");
  if (inputs.dim(2) != spec.input_size) {
    throw DimensionError("lstm: input feature extent " + std::to_string(inputs.dim(2)) + " != input_size " +
                         std::to_string(spec.input_size));
  }
  params.validate(spec);
  const std::size_t steps = inputs.dim(0), N = inputs.dim(1), H = spec.hidden_size, L = spec.num_layers;
  const Shape state_shape{L, N, H};
  if (initial != nullptr && (initial->h.shape() != state_shape || initial->c.shape() != state_shape)) {
    throw DimensionError("lstm: initial state must have shape " + shape_str(state_shape));
  }

  LstmForward<T> result;
  result.context.spec = spec;
  result.context.steps = steps;
  result.context.batch = N;
  result.context.params = params;
  result.context.layers.resize(L);
  std::vector<double> h_final(L * N * H), c_final(L * N * H);

  std::vector<double> layer_input = to_double(inputs);
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t in = l == 0 ? spec.input_size : H;
    LstmLayerCache& cache = result.context.layers[l];
    cache.input = layer_input;
    const std::vector<double> w_ih = to_double(params.layers[l].w_ih);
    const std::vector<double> w_hh = to_double(params.layers[l].w_hh);
    const std::vector<double> b_ih = to_double(params.layers[l].b_ih);
    const std::vector<double> b_hh = to_double(params.layers[l].b_hh);

    // Input projection for all steps at once: (T*N, 4H).
    std::vector<double> pre(steps * N * 4 * H, 0.0);
    gemm_accumulate(MatrixView::row_major(cache.input.data(), steps * N, in),
                    MatrixView::transposed(w_ih.data(), in, 4 * H), pre.data(), 4 * H);

    for (auto* v : {&cache.i, &cache.f, &cache.g, &cache.o, &cache.c, &cache.tanh_c, &cache.h}) {
      v->assign(steps * N * H, 0.0);
    }
    cache.h0.assign(N * H, 0.0);
    cache.c0.assign(N * H, 0.0);
    if (initial != nullptr) {
      for (std::size_t k = 0; k < N * H; ++k) {
        cache.h0[k] = static_cast<double>(initial->h[l * N * H + k]);
        cache.c0[k] = static_cast<double>(initial->c[l * N * H + k]);
      }
    }

    std::vector<double> gates(N * 4 * H);
    for (std::size_t t = 0; t < steps; ++t) {
      const double* h_prev = t == 0 ? cache.h0.data() : cache.h.data() + (t - 1) * N * H;
      const double* c_prev = t == 0 ? cache.c0.data() : cache.c.data() + (t - 1) * N * H;
      std::copy(pre.begin() + static_cast<std::ptrdiff_t>(t * N * 4 * H),
                pre.begin() + static_cast<std::ptrdiff_t>((t + 1) * N * 4 * H), gates.begin());
      gemm_accumulate(MatrixView::row_major(h_prev, N, H), MatrixView::transposed(w_hh.data(), H, 4 * H),
                      gates.data(), 4 * H);
      for (std::size_t n = 0; n < N; ++n) {
        const double* a = gates.data() + n * 4 * H;
        for (std::size_t j = 0; j < H; ++j) {
          const std::size_t k = (t * N + n) * H + j;
          const double gi = sigmoid(a[j] + b_ih[j] + b_hh[j]);
          const double gf = sigmoid(a[H + j] + b_ih[H + j] + b_hh[H + j]);
          const double gg = std::tanh(a[2 * H + j] + b_ih[2 * H + j] + b_hh[2 * H + j]);
          const double go = sigmoid(a[3 * H + j] + b_ih[3 * H + j] + b_hh[3 * H + j]);
          const double c = gf * c_prev[n * H + j] + gi * gg;
          const double tc = std::tanh(c);
          cache.i[k] = gi;
          cache.f[k] = gf;
          cache.g[k] = gg;
          cache.o[k] = go;
          cache.c[k] = c;
          cache.tanh_c[k] = tc;
          cache.h[k] = go * tc;
        }
      }
    }
    for (std::size_t k = 0; k < N * H; ++k) {
      h_final[l * N * H + k] = cache.h[(steps - 1) * N * H + k];
      c_final[l * N * H + k] = cache.c[(steps - 1) * N * H + k];
    }
    layer_input = cache.h;
  }

  result.outputs = from_double<T>({steps, N, H}, layer_input);
  result.final_state = {from_double<T>(state_shape, h_final), from_double<T>(state_shape, c_final)};
  return result;
}

template <class T>
LstmGrads<T> lstm_backward(const Tensor<T>& grad_outputs, const LstmContext<T>& context) {
  if (!context.valid()) throw StateError("lstm_backward: missing forward context");
  const LstmSpec& spec = context.spec;
  const std::size_t steps = context.steps, N = context.batch, H = spec.hidden_size, L = spec.num_layers;
  if (grad_outputs.shape() != Shape{steps, N, H}) {
    throw DimensionError("lstm_backward: grad shape " + shape_str(grad_outputs.shape()) + " != outputs shape");
  }

  LstmGrads<T> grads;
  grads.params.resize(L);
  std::vector<double> grad_h_seq = to_double(grad_outputs);

  for (std::size_t li = L; li-- > 0;) {
    const std::size_t in = li == 0 ? spec.input_size : H;
    const LstmLayerCache& cache = context.layers[li];
    const std::vector<double> w_ih = to_double(context.params.layers[li].w_ih);
    const std::vector<double> w_hh = to_double(context.params.layers[li].w_hh);

    std::vector<double> d_pre(steps * N * 4 * H, 0.0);
    std::vector<double> dh_next(N * H, 0.0);
    std::vector<double> dc_next(N * H, 0.0);
    std::vector<double> dw_hh(4 * H * H, 0.0);

    for (std::size_t t = steps; t-- > 0;) {
      const double* c_prev = t == 0 ? cache.c0.data() : cache.c.data() + (t - 1) * N * H;
      const double* h_prev = t == 0 ? cache.h0.data() : cache.h.data() + (t - 1) * N * H;
      double* da = d_pre.data() + t * N * 4 * H;
      for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t j = 0; j < H; ++j) {
          const std::size_t k = (t * N + n) * H + j;
          const double dh = grad_h_seq[k] + dh_next[n * H + j];
          const double gi = cache.i[k], gf = cache.f[k], gg = cache.g[k], go = cache.o[k], tc = cache.tanh_c[k];
          const double d_o = dh * tc;
          const double dc = dh * go * (1.0 - tc * tc) + dc_next[n * H + j];
          const double d_i = dc * gg;
          const double d_g = dc * gi;
          const double d_f = dc * c_prev[n * H + j];
          dc_next[n * H + j] = dc * gf;
          double* row = da + n * 4 * H;
          row[j] = d_i * gi * (1.0 - gi);
          row[H + j] = d_f * gf * (1.0 - gf);
          row[2 * H + j] = d_g * (1.0 - gg * gg);
          row[3 * H + j] = d_o * go * (1.0 - go);
        }
      }
      // dW_hh += da^T h_prev ; dh_prev = da W_hh
      gemm_accumulate(MatrixView::transposed(da, 4 * H, N), MatrixView::row_major(h_prev, N, H), dw_hh.data(), H);
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      gemm_accumulate(MatrixView::row_major(da, N, 4 * H), MatrixView::row_major(w_hh.data(), 4 * H, H),
                      dh_next.data(), H);
    }

    std::vector<double> dw_ih(4 * H * in, 0.0);
    gemm_accumulate(MatrixView::transposed(d_pre.data(), 4 * H, steps * N),
                    MatrixView::row_major(cache.input.data(), steps * N, in), dw_ih.data(), in);
    std::vector<double> d_input(steps * N * in, 0.0);
    gemm_accumulate(MatrixView::row_major(d_pre.data(), steps * N, 4 * H),
                    MatrixView::row_major(w_ih.data(), 4 * H, in), d_input.data(), in);
    std::vector<double> db(4 * H, 0.0);
    for (std::size_t r = 0; r < steps * N; ++r) {
      for (std::size_t j = 0; j < 4 * H; ++j) db[j] += d_pre[r * 4 * H + j];
    }

    grads.params[li] = {from_double<T>({4 * H, in}, dw_ih), from_double<T>({4 * H, H}, dw_hh),
                        from_double<T>({4 * H}, db), from_double<T>({4 * H}, db)};
    grad_h_seq = std::move(d_input);
  }
  grads.inputs = from_double<T>({steps, N, spec.input_size}, grad_h_seq);
  return grads;
}

template struct LstmParams<float>;
template struct LstmParams<double>;
template LstmForward<float> lstm_sequence(const Tensor<float>&, const LstmSpec&, const LstmParams<float>&,
                                          const LstmState<float>*);
template LstmForward<double> lstm_sequence(const Tensor<double>&, const LstmSpec&, const LstmParams<double>&,
                                           const LstmState<double>*);
template LstmGrads<float> lstm_backward(const Tensor<float>&, const LstmContext<float>&);
template LstmGrads<double> lstm_backward(const Tensor<double>&, const LstmContext<double>&);

}  // namespace stfl
