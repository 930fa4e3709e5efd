#pragma once

// Stateful layer objects over the functional ops. Each layer keeps the
// context of its most recent forward call so that backward can run; this
// makes a layer single-writer.

#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stfl/ops/batchnorm.hpp"
#include "stfl/ops/conv.hpp"
#include "stfl/ops/dense.hpp"
#include "stfl/ops/lstm.hpp"
#include "stfl/ops/pool.hpp"
#include "stfl/tensor.hpp"

namespace stfl {

using Rng = std::mt19937_64;

/// A named tensor owned by a layer. Non-trainable entries (batch-norm running
/// statistics) are serialized but excluded from the parameter count and the
/// optimizer.
template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;
};

template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, NormMode mode) = 0;
  /// Returns the input gradient and accumulates parameter gradients.
  virtual Tensor<T> backward(const Tensor<T>& grad) = 0;
  virtual void collect(std::vector<Parameter<T>*>& out) { (void)out; }
  virtual void initialize(Rng& rng) { (void)rng; }
};

template <class T>
using LayerPtr = std::unique_ptr<Layer<T>>;

enum class ConvInit {
  kaiming,   // normal, std sqrt(2 / fan_out)
  inflated,  // 2D kaiming filter replicated over time and divided by k_t
};

template <class T>
class Conv3dLayer : public Layer<T> {
 public:
  Conv3dLayer(const std::string& name, const Conv3dSpec& spec, ConvInit init = ConvInit::kaiming);
  Tensor<T> forward(const Tensor<T>& x, NormMode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect(std::vector<Parameter<T>*>& out) override;
  void initialize(Rng& rng) override;

  const Conv3dSpec& spec() const noexcept { return spec_; }
  Parameter<T>& weight() noexcept { return weight_; }

 private:
  Conv3dSpec spec_;
  ConvInit init_;
  Parameter<T> weight_;
  Parameter<T> bias_;
  Conv3dContext<T> context_;
};

template <class T>
class BatchNormLayer : public Layer<T> {
 public:
  BatchNormLayer(const std::string& name, std::size_t channels);
  Tensor<T> forward(const Tensor<T>& x, NormMode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect(std::vector<Parameter<T>*>& out) override;
  void initialize(Rng& rng) override;

 private:
  void reset();

  Parameter<T> gamma_, beta_, running_mean_, running_var_;
  BatchNormContext<T> context_;
};

template <class T>
class ReluLayer : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, NormMode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;

 private:
  Tensor<T> input_;
};

template <class T>
class Pool3dLayer : public Layer<T> {
 public:
  explicit Pool3dLayer(const Pool3dSpec& spec) : spec_(spec) {}
  Tensor<T> forward(const Tensor<T>& x, NormMode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;

 private:
  Pool3dSpec spec_;
  Pool3dContext<T> context_;
};

/// (N, C, 1, 1, 1) -> (N, C).
template <class T>
class FlattenLayer : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, NormMode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;

 private:
  Shape input_shape_;
};

enum class LinearInit {
  fan_in,  // normal, std sqrt(1 / fan_in)
  relu,    // normal, std sqrt(2 / fan_in), for layers feeding a ReLU
};

template <class T>
class LinearLayer : public Layer<T> {
 public:
  LinearLayer(const std::string& name, std::size_t in, std::size_t out, LinearInit init = LinearInit::fan_in);
  Tensor<T> forward(const Tensor<T>& x, NormMode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect(std::vector<Parameter<T>*>& out) override;
  void initialize(Rng& rng) override;

 private:
  LinearInit init_;
  Parameter<T> weight_, bias_;
  LinearContext<T> context_;
};

template <class T>
class Sequential : public Layer<T> {
 public:
  Sequential() = default;
  Layer<T>& add(LayerPtr<T> layer);
  template <class L, class... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    add(std::move(layer));
    return ref;
  }
  Tensor<T> forward(const Tensor<T>& x, NormMode mode) override;
  /// As forward, also recording the output shape of every child layer.
  Tensor<T> forward_trace(const Tensor<T>& x, NormMode mode, std::vector<Shape>& shapes);
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect(std::vector<Parameter<T>*>& out) override;
  void initialize(Rng& rng) override;
  std::size_t size() const noexcept { return layers_.size(); }

 private:
  std::vector<LayerPtr<T>> layers_;
};

/// relu(main(x) + shortcut(x)); identity shortcut when none is given.
template <class T>
class ResidualBlock : public Layer<T> {
 public:
  ResidualBlock(LayerPtr<T> main, LayerPtr<T> shortcut);
  Tensor<T> forward(const Tensor<T>& x, NormMode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect(std::vector<Parameter<T>*>& out) override;
  void initialize(Rng& rng) override;

 private:
  LayerPtr<T> main_, shortcut_;
  Tensor<T> sum_;
};

/// Runs each branch on the same input and concatenates along channels.
template <class T>
class ConcatBranches : public Layer<T> {
 public:
  void add_branch(LayerPtr<T> branch) { branches_.push_back(std::move(branch)); }
  Tensor<T> forward(const Tensor<T>& x, NormMode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect(std::vector<Parameter<T>*>& out) override;
  void initialize(Rng& rng) override;

 private:
  std::vector<LayerPtr<T>> branches_;
  std::vector<std::size_t> channels_;
};

/// (N, C, T, H, W) -> (T, N, C): spatial mean of every frame.
template <class T>
class FrameSequenceLayer : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, NormMode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;

 private:
  Shape input_shape_;
};

/// Stacked LSTM over (T, N, F); emits the top layer's last step (N, H).
template <class T>
class LstmLayer : public Layer<T> {
 public:
  LstmLayer(const std::string& name, const LstmSpec& spec);
  Tensor<T> forward(const Tensor<T>& x, NormMode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect(std::vector<Parameter<T>*>& out) override;
  void initialize(Rng& rng) override;

 private:
  LstmParams<T> current_params() const;

  LstmSpec spec_;
  // Four entries per layer: w_ih, w_hh, b_ih, b_hh.
  std::vector<Parameter<T>> params_;
  LstmContext<T> context_;
};

}  // namespace stfl
