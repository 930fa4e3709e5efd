#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "stfl/models/arch.hpp"
#include "stfl/models/layers.hpp"

namespace stfl {

/// An instantiated architecture: a layer graph plus a flat, ordered view of
/// its named parameters.
template <class T>
class Network {
 public:
  Network(ArchSpec spec, std::unique_ptr<Sequential<T>> body);

  const ArchSpec& spec() const noexcept { return spec_; }
  NormMode mode() const noexcept { return mode_; }
  void set_mode(NormMode mode) noexcept { mode_ = mode; }

  /// clips (N, C, T, H, W) matching spec().clip -> logits (N, 2).
  Tensor<T> forward(const Tensor<T>& clips);
  /// Output shapes of the top-level layers for one forward pass.
  std::vector<Shape> trace(const Tensor<T>& clips);
  /// Accumulates parameter gradients from d loss / d logits.
  Tensor<T> backward(const Tensor<T>& grad_logits);

  /// Every named tensor, including batch-norm running statistics.
  const std::vector<Parameter<T>*>& parameters() noexcept { return params_; }
  std::vector<Parameter<T>*> trainable_parameters();
  Parameter<T>* find(const std::string& name);
  /// Number of trainable scalars.
  std::size_t param_count() const noexcept { return count_; }
  void zero_grad();

 private:
  void check_input(const Tensor<T>& clips) const;

  ArchSpec spec_;
  std::unique_ptr<Sequential<T>> body_;
  NormMode mode_ = NormMode::train;
  std::vector<Parameter<T>*> params_;
  std::size_t count_ = 0;
};

/// Builds and initializes the network; same spec and seed give bitwise-identical
/// parameters.
template <class T>
Network<T> build(const ArchSpec& spec, std::uint64_t seed);

enum class ConvKind {
  full3d,      // t x d x d
  spatial2d,   // 1 x d x d
  factorized,  // 1 x d x d into midplanes, batchnorm, relu, t x 1 x 1
};

/// Two-convolution residual block (in -> out -> out) with a 1x1x1 projection on
/// the skip path when the stride or width changes. Factorized blocks use
/// midplanes(in, out) for both of their convolutions.
template <class T>
LayerPtr<T> basic_block(const std::string& name, std::size_t in, std::size_t out, std::size_t stride, ConvKind kind);

/// Single convolution unit of the given kind, with `mid` midplanes when factorized.
template <class T>
LayerPtr<T> conv_unit(const std::string& name, std::size_t in, std::size_t out, std::size_t stride, ConvKind kind,
                      std::size_t mid);

}  // namespace stfl
