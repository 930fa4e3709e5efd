#pragma once

#include <vector>

#include "stfl/tensor.hpp"

namespace stfl {

struct LstmSpec {
  std::size_t input_size = 1;
  std::size_t hidden_size = 1;
  std::size_t num_layers = 1;
};

/// Gate blocks are stacked in the order (input, forget, candidate, output):
/// rows [0,H) input gate, [H,2H) forget, [2H,3H) candidate, [3H,4H) output.
template <class T>
struct LstmLayerParams {
  Tensor<T> w_ih;  // (4H, input_size or H)
  Tensor<T> w_hh;  // (4H, H)
  Tensor<T> b_ih;  // (4H)
  Tensor<T> b_hh;  // (4H)
};

template <class T>
struct LstmParams {
  std::vector<LstmLayerParams<T>> layers;

  static LstmParams zeros(const LstmSpec& spec);
  void validate(const LstmSpec& spec) const;
};

/// Hidden and cell state, each (num_layers, N, H).
template <class T>
struct LstmState {
  Tensor<T> h;
  Tensor<T> c;
};

struct LstmLayerCache {
  std::vector<double> input;  // (T*N, in)
  std::vector<double> i, f, g, o, c, tanh_c, h;  // (T*N, H)
  std::vector<double> h0, c0;  // (N, H)
};

template <class T>
struct LstmContext {
  LstmSpec spec;
  std::size_t steps = 0;
  std::size_t batch = 0;
  LstmParams<T> params;
  std::vector<LstmLayerCache> layers;

  bool valid() const noexcept { return steps > 0 && !layers.empty(); }
};

template <class T>
struct LstmForward {
  Tensor<T> outputs;  // (T, N, H) from the top layer
  LstmState<T> final_state;
  LstmContext<T> context;
};

template <class T>
struct LstmGrads {
  Tensor<T> inputs;
  std::vector<LstmLayerParams<T>> params;
};

/// Stacked LSTM over a (T, N, F) sequence; zero initial state when none is given.
template <class T>
LstmForward<T> lstm_sequence(const Tensor<T>& inputs, const LstmSpec& spec, const LstmParams<T>& params,
                             const LstmState<T>* initial = nullptr);

/// Backpropagation through time from gradients of the top-layer outputs.
template <class T>
LstmGrads<T> lstm_backward(const Tensor<T>& grad_outputs, const LstmContext<T>& context);

}  // namespace stfl
