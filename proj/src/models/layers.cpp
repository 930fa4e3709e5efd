#include "stfl/models/layers.hpp"

#include <cmath>

#include "stfl/models/inflate.hpp"

namespace stfl {

namespace {

template <class T>
Parameter<T> make_param(const std::string& name, Shape shape, bool trainable = true) {
  Parameter<T> p{name, Tensor<T>(shape), Tensor<T>(shape), trainable};
  return p;
}

template <class T>
void fill_normal(Tensor<T>& t, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (T& v : t.data()) v = static_cast<T>(dist(rng));
}

template <class T>
void accumulate(Tensor<T>& into, const Tensor<T>& g) {
  for (std::size_t i = 0; i < into.numel(); ++i) into[i] += g[i];
}

}  // namespace

// ---------------------------------------------------------------- conv

template <class T>
Conv3dLayer<T>::Conv3dLayer(const std::string& name, const Conv3dSpec& spec, ConvInit init)
    : spec_(spec), init_(init), weight_(make_param<T>(name + ".weight", spec.weight_shape())) {
  spec_.validate();
  if (spec_.has_bias) bias_ = make_param<T>(name + ".bias", {spec_.out_channels});
}

template <class T>
Tensor<T> Conv3dLayer<T>::forward(const Tensor<T>& x, NormMode) {
  auto fwd = conv3d_forward(x, spec_, weight_.value, spec_.has_bias ? &bias_.value : nullptr);
  context_ = std::move(fwd.context);
  return std::move(fwd.output);
}

template <class T>
Tensor<T> Conv3dLayer<T>::backward(const Tensor<T>& grad) {
  const auto g = conv3d_backward(grad, context_);
  accumulate(weight_.grad, g.weights);
  if (spec_.has_bias) accumulate(bias_.grad, *g.bias);
  return g.input;
}

template <class T>
void Conv3dLayer<T>::collect(std::vector<Parameter<T>*>& out) {
  out.push_back(&weight_);
  if (spec_.has_bias) out.push_back(&bias_);
}

template <class T>
void Conv3dLayer<T>::initialize(Rng& rng) {
  const Extent3& k = spec_.kernel;
  if (init_ == ConvInit::inflated) {
    Tensor<T> flat({spec_.out_channels, spec_.in_channels, k.h, k.w});
    fill_normal(flat, std::sqrt(2.0 / static_cast<double>(spec_.out_channels * k.h * k.w)), rng);
    weight_.value = inflate_2d_to_3d(flat, k.t);
  } else {
    fill_normal(weight_.value, std::sqrt(2.0 / static_cast<double>(spec_.out_channels * k.volume())), rng);
  }
  if (spec_.has_bias) bias_.value = Tensor<T>({spec_.out_channels});
}

// ---------------------------------------------------------------- batchnorm

template <class T>
BatchNormLayer<T>::BatchNormLayer(const std::string& name, std::size_t channels)
    : gamma_(make_param<T>(name + ".gamma", {channels})),
      beta_(make_param<T>(name + ".beta", {channels})),
      running_mean_(make_param<T>(name + ".running_mean", {channels}, false)),
      running_var_(make_param<T>(name + ".running_var", {channels}, false)) {
  reset();
}

template <class T>
Tensor<T> BatchNormLayer<T>::forward(const Tensor<T>& x, NormMode mode) {
  auto fwd = batchnorm_forward(x, gamma_.value, beta_.value, mode, running_mean_.value, running_var_.value);
  context_ = std::move(fwd.context);
  return std::move(fwd.output);
}

template <class T>
Tensor<T> BatchNormLayer<T>::backward(const Tensor<T>& grad) {
  const auto g = batchnorm_backward(grad, context_);
  accumulate(gamma_.grad, g.gamma);
  accumulate(beta_.grad, g.beta);
  return g.input;
}

template <class T>
void BatchNormLayer<T>::collect(std::vector<Parameter<T>*>& out) {
  out.insert(out.end(), {&gamma_, &beta_, &running_mean_, &running_var_});
}

template <class T>
void BatchNormLayer<T>::initialize(Rng&) {
  reset();
}

template <class T>
void BatchNormLayer<T>::reset() {
  const Shape s = gamma_.value.shape();
  gamma_.value = Tensor<T>::ones(s);
  beta_.value = Tensor<T>::zeros(s);
  running_mean_.value = Tensor<T>::zeros(s);
  running_var_.value = Tensor<T>::ones(s);
}

// ---------------------------------------------------------------- relu / pool / flatten

template <class T>
Tensor<T> ReluLayer<T>::forward(const Tensor<T>& x, NormMode) {
  input_ = x;
  return relu(x);
}

template <class T>
Tensor<T> ReluLayer<T>::backward(const Tensor<T>& grad) {
  if (input_.empty()) throw StateError("relu backward before forward");
  return relu_backward(grad, input_);
}

template <class T>
Tensor<T> Pool3dLayer<T>::forward(const Tensor<T>& x, NormMode) {
  auto fwd = pool3d_forward(x, spec_);
  context_ = std::move(fwd.context);
  return std::move(fwd.output);
}

template <class T>
Tensor<T> Pool3dLayer<T>::backward(const Tensor<T>& grad) {
  return pool3d_backward(grad, context_);
}

template <class T>
Tensor<T> FlattenLayer<T>::forward(const Tensor<T>& x, NormMode) {
  if (x.rank() < 2) throw DimensionError("flatten: expected rank >= 2, got " + shape_str(x.shape()));
  input_shape_ = x.shape();
  return x.reshaped({x.dim(0), x.numel() / x.dim(0)});
}

template <class T>
Tensor<T> FlattenLayer<T>::backward(const Tensor<T>& grad) {
  if (input_shape_.empty()) throw StateError("flatten backward before forward");
  return grad.reshaped(input_shape_);
}

// ---------------------------------------------------------------- linear

template <class T>
LinearLayer<T>::LinearLayer(const std::string& name, std::size_t in, std::size_t out, LinearInit init)
    : init_(init), weight_(make_param<T>(name + ".weight", {out, in})), bias_(make_param<T>(name + ".bias", {out})) {}

template <class T>
Tensor<T> LinearLayer<T>::forward(const Tensor<T>& x, NormMode) {
  auto fwd = linear_forward(x, weight_.value, &bias_.value);
  context_ = std::move(fwd.context);
  return std::move(fwd.output);
}

template <class T>
Tensor<T> LinearLayer<T>::backward(const Tensor<T>& grad) {
  const auto g = linear_backward(grad, context_);
  accumulate(weight_.grad, g.weights);
  accumulate(bias_.grad, *g.bias);
  return g.input;
}

template <class T>
void LinearLayer<T>::collect(std::vector<Parameter<T>*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

template <class T>
void LinearLayer<T>::initialize(Rng& rng) {
  const double fan_in = static_cast<double>(weight_.value.dim(1));
  fill_normal(weight_.value, std::sqrt((init_ == LinearInit::relu ? 2.0 : 1.0) / fan_in), rng);
  bias_.value = Tensor<T>::zeros(bias_.value.shape());
}

// ---------------------------------------------------------------- containers

template <class T>
Layer<T>& Sequential<T>::add(LayerPtr<T> layer) {
  layers_.push_back(std::move(layer));
  return *layers_.back();
}

template <class T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x, NormMode mode) {
  if (layers_.empty()) return x;
  Tensor<T> y = layers_.front()->forward(x, mode);
  for (std::size_t i = 1; i < layers_.size(); ++i) y = layers_[i]->forward(y, mode);
  return y;
}

template <class T>
Tensor<T> Sequential<T>::forward_trace(const Tensor<T>& x, NormMode mode, std::vector<Shape>& shapes) {
  Tensor<T> y = x;
  for (auto& l : layers_) {
    y = l->forward(y, mode);
    shapes.push_back(y.shape());
  }
  return y;
}

template <class T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& grad) {
  if (layers_.empty()) return grad;
  Tensor<T> g = layers_.back()->backward(grad);
  for (std::size_t i = layers_.size() - 1; i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

template <class T>
void Sequential<T>::collect(std::vector<Parameter<T>*>& out) {
  for (auto& l : layers_) l->collect(out);
}

template <class T>
void Sequential<T>::initialize(Rng& rng) {
  for (auto& l : layers_) l->initialize(rng);
}

template <class T>
ResidualBlock<T>::ResidualBlock(LayerPtr<T> main, LayerPtr<T> shortcut)
    : main_(std::move(main)), shortcut_(std::move(shortcut)) {}

template <class T>
Tensor<T> ResidualBlock<T>::forward(const Tensor<T>& x, NormMode mode) {
  Tensor<T> y = main_->forward(x, mode);
  const Tensor<T> skip = shortcut_ ? shortcut_->forward(x, mode) : x;
  if (y.shape() != skip.shape()) {
    throw DimensionError("residual block: main path " + shape_str(y.shape()) + " vs shortcut " +
                         shape_str(skip.shape()));
  }
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] += skip[i];
  sum_ = y;
  return relu(y);
}

template <class T>
Tensor<T> ResidualBlock<T>::backward(const Tensor<T>& grad) {
  if (sum_.empty()) throw StateError("residual block backward before forward");
  const Tensor<T> g = relu_backward(grad, sum_);
  Tensor<T> gx = main_->backward(g);
  const Tensor<T> gs = shortcut_ ? shortcut_->backward(g) : g;
  for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += gs[i];
  return gx;
}

template <class T>
void ResidualBlock<T>::collect(std::vector<Parameter<T>*>& out) {
  main_->collect(out);
  if (shortcut_) shortcut_->collect(out);
}

template <class T>
void ResidualBlock<T>::initialize(Rng& rng) {
  main_->initialize(rng);
  if (shortcut_) shortcut_->initialize(rng);
}

template <class T>
Tensor<T> ConcatBranches<T>::forward(const Tensor<T>& x, NormMode mode) {
  std::vector<Tensor<T>> outs;
  outs.reserve(branches_.size());
  for (auto& b : branches_) outs.push_back(b->forward(x, mode));
  if (outs.empty()) throw StateError("concat: no branches");
  Shape shape = outs.front().shape();
  channels_.clear();
  std::size_t total = 0;
  for (const auto& o : outs) {
    Shape rest = o.shape();
    rest[1] = shape[1];
    if (rest != shape) {
      throw DimensionError("concat: branch output " + shape_str(o.shape()) + " incompatible with " +
                           shape_str(shape));
    }
    channels_.push_back(o.dim(1));
    total += o.dim(1);
  }
  const std::size_t N = shape[0];
  const std::size_t inner = outs.front().numel() / (N * shape[1]);
  shape[1] = total;
  Tensor<T> y(shape);
  for (std::size_t n = 0; n < N; ++n) {
    T* dst = y.raw() + n * total * inner;
    for (const auto& o : outs) {
      const std::size_t len = o.dim(1) * inner;
      std::copy_n(o.raw() + n * len, len, dst);
      dst += len;
    }
  }
  return y;
}

template <class T>
Tensor<T> ConcatBranches<T>::backward(const Tensor<T>& grad) {
  if (channels_.size() != branches_.size()) throw StateError("concat backward before forward");
  const std::size_t N = grad.dim(0), total = grad.dim(1);
  const std::size_t inner = grad.numel() / (N * total);
  Tensor<T> gx;
  std::size_t offset = 0;
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    Shape s = grad.shape();
    s[1] = channels_[b];
    Tensor<T> part(s);
    const std::size_t len = channels_[b] * inner;
    for (std::size_t n = 0; n < N; ++n) {
      std::copy_n(grad.raw() + (n * total + offset) * inner, len, part.raw() + n * len);
    }
    offset += channels_[b];
    Tensor<T> g = branches_[b]->backward(part);
    if (gx.empty()) {
      gx = std::move(g);
    } else {
      accumulate(gx, g);
    }
  }
  return gx;
}

template <class T>
void ConcatBranches<T>::collect(std::vector<Parameter<T>*>& out) {
  for (auto& b : branches_) b->collect(out);
}

template <class T>
void ConcatBranches<T>::initialize(Rng& rng) {
  for (auto& b : branches_) b->initialize(rng);
}

// ---------------------------------------------------------------- recurrent head

template <class T>
Tensor<T> FrameSequenceLayer<T>::forward(const Tensor<T>& x, NormMode) {
  require_rank(x, 5, "frame sequence input");
  input_shape_ = x.shape();
  const std::size_t N = x.dim(0), C = x.dim(1), Tn = x.dim(2), plane = x.dim(3) * x.dim(4);
  Tensor<T> y({Tn, N, C});
  const double inv = 1.0 / static_cast<double>(plane);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < Tn; ++t) {
        const T* src = x.raw() + ((n * C + c) * Tn + t) * plane;
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) s += static_cast<double>(src[i]);
        y.at(t, n, c) = static_cast<T>(s * inv);
      }
  return y;
}

template <class T>
Tensor<T> FrameSequenceLayer<T>::backward(const Tensor<T>& grad) {
  if (input_shape_.empty()) throw StateError("frame sequence backward before forward");
  const std::size_t N = input_shape_[0], C = input_shape_[1], Tn = input_shape_[2],
                    plane = input_shape_[3] * input_shape_[4];
  Tensor<T> gx(input_shape_);
  const double inv = 1.0 / static_cast<double>(plane);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < Tn; ++t) {
        const T g = static_cast<T>(static_cast<double>(grad.at(t, n, c)) * inv);
        std::fill_n(gx.raw() + ((n * C + c) * Tn + t) * plane, plane, g);
      }
  return gx;
}

template <class T>
LstmLayer<T>::LstmLayer(const std::string& name, const LstmSpec& spec) : spec_(spec) {
  const std::size_t H = spec.hidden_size;
  for (std::size_t l = 0; l < spec.num_layers; ++l) {
    const std::string p = name + ".l" + std::to_string(l);
    const std::size_t in = l == 0 ? spec.input_size : H;
    params_.push_back(make_param<T>(p + ".w_ih", {4 * H, in}));
    params_.push_back(make_param<T>(p + ".w_hh", {4 * H, H}));
    params_.push_back(make_param<T>(p + ".b_ih", {4 * H}));
    params_.push_back(make_param<T>(p + ".b_hh", {4 * H}));
  }
}

template <class T>
LstmParams<T> LstmLayer<T>::current_params() const {
  LstmParams<T> p;
  for (std::size_t l = 0; l < spec_.num_layers; ++l) {
    p.layers.push_back({params_[4 * l].value, params_[4 * l + 1].value, params_[4 * l + 2].value,
                        params_[4 * l + 3].value});
  }
  return p;
}

template <class T>
Tensor<T> LstmLayer<T>::forward(const Tensor<T>& x, NormMode) {
  auto fwd = lstm_sequence(x, spec_, current_params());
  context_ = std::move(fwd.context);
  const std::size_t steps = x.dim(0), N = x.dim(1), H = spec_.hidden_size;
  Tensor<T> last({N, H});
  std::copy_n(fwd.outputs.raw() + (steps - 1) * N * H, N * H, last.raw());
  return last;
}

template <class T>
Tensor<T> LstmLayer<T>::backward(const Tensor<T>& grad) {
  if (!context_.valid()) throw StateError("lstm backward before forward");
  const std::size_t steps = context_.steps, N = context_.batch, H = spec_.hidden_size;
  if (grad.shape() != Shape{N, H}) throw DimensionError("lstm backward: grad shape " + shape_str(grad.shape()));
  Tensor<T> full({steps, N, H});
  std::copy_n(grad.raw(), N * H, full.raw() + (steps - 1) * N * H);
  const auto g = lstm_backward(full, context_);
  for (std::size_t l = 0; l < spec_.num_layers; ++l) {
    accumulate(params_[4 * l].grad, g.params[l].w_ih);
    accumulate(params_[4 * l + 1].grad, g.params[l].w_hh);
    accumulate(params_[4 * l + 2].grad, g.params[l].b_ih);
    accumulate(params_[4 * l + 3].grad, g.params[l].b_hh);
  }
  return g.inputs;
}

template <class T>
void LstmLayer<T>::collect(std::vector<Parameter<T>*>& out) {
  for (auto& p : params_) out.push_back(&p);
}

template <class T>
void LstmLayer<T>::initialize(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(spec_.hidden_size));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& p : params_)
    for (T& v : p.value.data()) v = static_cast<T>(dist(rng));
}

#define STFL_INSTANTIATE_LAYERS(T)    \
  template class Conv3dLayer<T>;      \
  template class BatchNormLayer<T>;   \
  template class ReluLayer<T>;        \
  template class Pool3dLayer<T>;      \
  template class FlattenLayer<T>;     \
  template class LinearLayer<T>;      \
  template class Sequential<T>;       \
  template class ResidualBlock<T>;    \
  template class ConcatBranches<T>;   \
  template class FrameSequenceLayer<T>; \
  template class LstmLayer<T>;

STFL_INSTANTIATE_LAYERS(float)
STFL_INSTANTIATE_LAYERS(double)

}  // namespace stfl
