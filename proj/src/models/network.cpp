#include "stfl/models/network.hpp"

#include <array>
#include <set>

#include "stfl/models/inflate.hpp"

namespace stfl {

template <class T>
Network<T>::Network(ArchSpec spec, std::unique_ptr<Sequential<T>> body) : spec_(spec), body_(std::move(body)) {
  body_->collect(params_);
  std::set<std::string> seen;
  for (const auto* p : params_) {
    if (!seen.insert(p->name).second) throw ConfigError("duplicate parameter name '" + p->name + "'");
    if (p->trainable) count_ += p->value.numel();
  }
}

template <class T>
void Network<T>::check_input(const Tensor<T>& clips) const {
  const ClipShape& c = spec_.clip;
  if (clips.rank() != 5 || clips.dim(1) != c.c || clips.dim(2) != c.t || clips.dim(3) != c.h || clips.dim(4) != c.w) {
    throw DimensionError(family_name(spec_.family) + ": expected clips (N," + std::to_string(c.c) + "," +
                         std::to_string(c.t) + "," + std::to_string(c.h) + "," + std::to_string(c.w) + "), got " +
                         shape_str(clips.shape()));
  }
}

template <class T>
Tensor<T> Network<T>::forward(const Tensor<T>& clips) {
  check_input(clips);
  return body_->forward(clips, mode_);
}

template <class T>
std::vector<Shape> Network<T>::trace(const Tensor<T>& clips) {
  check_input(clips);
  std::vector<Shape> shapes;
  body_->forward_trace(clips, mode_, shapes);
  return shapes;
}

template <class T>
Tensor<T> Network<T>::backward(const Tensor<T>& grad_logits) {
  return body_->backward(grad_logits);
}

template <class T>
std::vector<Parameter<T>*> Network<T>::trainable_parameters() {
  std::vector<Parameter<T>*> out;
  for (auto* p : params_)
    if (p->trainable) out.push_back(p);
  return out;
}

template <class T>
Parameter<T>* Network<T>::find(const std::string& name) {
  for (auto* p : params_)
    if (p->name == name) return p;
  return nullptr;
}

template <class T>
void Network<T>::zero_grad() {
  for (auto* p : params_) std::fill(p->grad.data().begin(), p->grad.data().end(), T{0});
}

namespace {

Conv3dSpec conv_spec(std::size_t in, std::size_t out, Extent3 k, Extent3 s, Extent3 p, bool bias = false) {
  Conv3dSpec spec;
  spec.in_channels = in;
  spec.out_channels = out;
  spec.kernel = k;
  spec.stride = s;
  spec.padding = p;
  spec.has_bias = bias;
  return spec;
}

Pool3dSpec pool_spec(PoolKind kind, Extent3 w, Extent3 s, Extent3 p) {
  Pool3dSpec spec;
  spec.kind = kind;
  spec.window = w;
  spec.stride = s;
  spec.padding = p;
  return spec;
}

template <class T>
void conv_bn_relu(Sequential<T>& seq, const std::string& name, const Conv3dSpec& spec,
                  ConvInit init = ConvInit::kaiming) {
  seq.template emplace<Conv3dLayer<T>>(name + ".conv", spec, init);
  seq.template emplace<BatchNormLayer<T>>(name + ".bn", spec.out_channels);
  seq.template emplace<ReluLayer<T>>();
}

template <class T>
void classifier_head(Sequential<T>& seq, const std::string& name, std::size_t features) {
  seq.template emplace<Pool3dLayer<T>>(pool_spec(PoolKind::global_avg, {}, {}, {}));
  seq.template emplace<FlattenLayer<T>>();
  seq.template emplace<LinearLayer<T>>(name, features, 2);
}

// ---------------------------------------------------------------- residual family

template <class T>
std::unique_ptr<Sequential<T>> build_resnet(const ArchSpec& spec) {
  const std::string f = family_name(spec.family);
  auto net = std::make_unique<Sequential<T>>();
  const std::size_t c1 = spec.width(64);
  if (spec.family == Family::r2plus1d) {
    auto stem = std::make_unique<Sequential<T>>();
    const std::size_t m = midplanes(spec.clip.c, c1);
    stem->template emplace<Conv3dLayer<T>>(f + ".stem.spatial",
                                           conv_spec(spec.clip.c, m, {1, 3, 3}, {1, 2, 2}, {0, 1, 1}));
    stem->template emplace<BatchNormLayer<T>>(f + ".stem.mid_bn", m);
    stem->template emplace<ReluLayer<T>>();
    stem->template emplace<Conv3dLayer<T>>(f + ".stem.temporal", conv_spec(m, c1, {3, 1, 1}, {1, 1, 1}, {1, 0, 0}));
    stem->template emplace<BatchNormLayer<T>>(f + ".stem.bn", c1);
    stem->template emplace<ReluLayer<T>>();
    net->add(std::move(stem));
  } else {
    conv_bn_relu(*net, f + ".stem", conv_spec(spec.clip.c, c1, {3, 3, 3}, {1, 2, 2}, {1, 1, 1}));
  }
  const std::array<std::size_t, 4> widths{spec.width(64), spec.width(128), spec.width(256), spec.width(512)};
  std::size_t in = c1;
  for (std::size_t s = 0; s < widths.size(); ++s) {
    ConvKind kind = ConvKind::full3d;
    if (spec.family == Family::r2plus1d) kind = ConvKind::factorized;
    if (spec.family == Family::mc3 && s > 0) kind = ConvKind::spatial2d;
    const std::string stage = f + ".stage" + std::to_string(s + 2);
    for (std::size_t b = 0; b < 2; ++b) {
      const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
      net->add(basic_block<T>(stage + "." + std::to_string(b), in, widths[s], stride, kind));
      in = widths[s];
    }
  }
  classifier_head(*net, f + ".fc", in);
  return net;
}

// ---------------------------------------------------------------- inflated inception

// Inception-V1 mixed block: 1x1 | 1x1 -> 3x3 | 1x1 -> 3x3 | pool -> 1x1.
struct MixedSpec {
  const char* name;
  std::array<std::size_t, 6> c;  // b0, b1 reduce, b1, b2 reduce, b2, b3
};

constexpr std::array<MixedSpec, 9> kMixed{{
    {"mixed_3b", {64, 96, 128, 16, 32, 32}},
    {"mixed_3c", {128, 128, 192, 32, 96, 64}},
    {"mixed_4b", {192, 96, 208, 16, 48, 64}},
    {"mixed_4c", {160, 112, 224, 24, 64, 64}},
    {"mixed_4d", {128, 128, 256, 24, 64, 64}},
    {"mixed_4e", {112, 144, 288, 32, 64, 64}},
    {"mixed_4f", {256, 160, 320, 32, 128, 128}},
    {"mixed_5b", {256, 160, 320, 32, 128, 128}},
    {"mixed_5c", {384, 192, 384, 48, 128, 128}},
}};

constexpr std::size_t kMaxTemporal = 7;

/// Square 2D kernel k inflated to min(k, 7) frames with "same" padding.
template <class T>
void inflated_unit(Sequential<T>& seq, const std::string& name, std::size_t in, std::size_t out, std::size_t k,
                   std::size_t stride = 1) {
  const std::size_t kt = std::min(k, kMaxTemporal);
  conv_bn_relu(seq, name, conv_spec(in, out, {kt, k, k}, {stride, stride, stride}, {(kt - 1) / 2, (k - 1) / 2, (k - 1) / 2}),
               ConvInit::inflated);
}

template <class T>
LayerPtr<T> mixed_block(const ArchSpec& spec, const std::string& name, std::size_t in, const MixedSpec& m,
                        std::size_t& out) {
  std::array<std::size_t, 6> c{};
  for (std::size_t i = 0; i < 6; ++i) c[i] = spec.width(m.c[i]);
  auto block = std::make_unique<ConcatBranches<T>>();
  auto b0 = std::make_unique<Sequential<T>>();
  inflated_unit(*b0, name + ".b0", in, c[0], 1);
  auto b1 = std::make_unique<Sequential<T>>();
  inflated_unit(*b1, name + ".b1a", in, c[1], 1);
  inflated_unit(*b1, name + ".b1b", c[1], c[2], 3);
  auto b2 = std::make_unique<Sequential<T>>();
  inflated_unit(*b2, name + ".b2a", in, c[3], 1);
  inflated_unit(*b2, name + ".b2b", c[3], c[4], 3);
  auto b3 = std::make_unique<Sequential<T>>();
  b3->template emplace<Pool3dLayer<T>>(pool_spec(PoolKind::max, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}));
  inflated_unit(*b3, name + ".b3", in, c[5], 1);
  block->add_branch(std::move(b0));
  block->add_branch(std::move(b1));
  block->add_branch(std::move(b2));
  block->add_branch(std::move(b3));
  out = c[0] + c[2] + c[4] + c[5];
  return block;
}

template <class T>
std::unique_ptr<Sequential<T>> build_i3d(const ArchSpec& spec) {
  auto net = std::make_unique<Sequential<T>>();
  const std::size_t c64 = spec.width(64), c192 = spec.width(192);
  inflated_unit(*net, "i3d.conv1a", spec.clip.c, c64, 7, 2);
  net->template emplace<Pool3dLayer<T>>(pool_spec(PoolKind::max, {1, 3, 3}, {1, 2, 2}, {0, 1, 1}));
  inflated_unit(*net, "i3d.conv2b", c64, c64, 1);
  inflated_unit(*net, "i3d.conv2c", c64, c192, 3);
  net->template emplace<Pool3dLayer<T>>(pool_spec(PoolKind::max, {1, 3, 3}, {1, 2, 2}, {0, 1, 1}));
  std::size_t in = c192;
  for (std::size_t i = 0; i < kMixed.size(); ++i) {
    if (i == 2) net->template emplace<Pool3dLayer<T>>(pool_spec(PoolKind::max, {3, 3, 3}, {2, 2, 2}, {1, 1, 1}));
    if (i == 7) net->template emplace<Pool3dLayer<T>>(pool_spec(PoolKind::max, {2, 2, 2}, {2, 2, 2}, {0, 0, 0}));
    std::size_t out = 0;
    net->add(mixed_block<T>(spec, std::string("i3d.") + kMixed[i].name, in, kMixed[i], out));
    in = out;
  }
  // The final 1x1x1 classifier convolution over pooled features is a linear map.
  classifier_head(*net, "i3d.logits", in);
  return net;
}

// ---------------------------------------------------------------- recurrent

template <class T>
std::unique_ptr<Sequential<T>> build_rcn(const ArchSpec& spec) {
  auto net = std::make_unique<Sequential<T>>();
  // VGG-11 layout; 0 marks a 2x2 spatial max-pool.
  constexpr std::array<std::size_t, 13> cfg{64, 0, 128, 0, 256, 256, 0, 512, 512, 0, 512, 512, 0};
  std::size_t in = spec.clip.c, h = spec.clip.h, w = spec.clip.w;
  std::size_t idx = 0;
  for (std::size_t c : cfg) {
    if (c == 0) {
      if (h < 2 || w < 2) continue;
      net->template emplace<Pool3dLayer<T>>(pool_spec(PoolKind::max, {1, 2, 2}, {1, 2, 2}, {0, 0, 0}));
      h /= 2;
      w /= 2;
      continue;
    }
    const std::size_t out = spec.width(c);
    conv_bn_relu(*net, "rcn.encoder." + std::to_string(idx++), conv_spec(in, out, {1, 3, 3}, {1, 1, 1}, {0, 1, 1}));
    in = out;
  }
  net->template emplace<FrameSequenceLayer<T>>();
  const std::size_t hidden = spec.width(512);
  net->template emplace<LstmLayer<T>>("rcn.lstm", LstmSpec{in, hidden, 3});
  net->template emplace<LinearLayer<T>>("rcn.fc1", hidden, spec.width(256), LinearInit::relu);
  net->template emplace<ReluLayer<T>>();
  net->template emplace<LinearLayer<T>>("rcn.fc2", spec.width(256), 2);
  return net;
}

}  // namespace

template <class T>
LayerPtr<T> conv_unit(const std::string& name, std::size_t in, std::size_t out, std::size_t stride, ConvKind kind,
                      std::size_t mid) {
  const std::size_t s = stride;
  switch (kind) {
    case ConvKind::full3d:
      return std::make_unique<Conv3dLayer<T>>(name, conv_spec(in, out, {3, 3, 3}, {s, s, s}, {1, 1, 1}));
    case ConvKind::spatial2d:
      return std::make_unique<Conv3dLayer<T>>(name, conv_spec(in, out, {1, 3, 3}, {s, s, s}, {0, 1, 1}));
    case ConvKind::factorized: {
      auto seq = std::make_unique<Sequential<T>>();
      seq->template emplace<Conv3dLayer<T>>(name + ".spatial", conv_spec(in, mid, {1, 3, 3}, {1, s, s}, {0, 1, 1}));
      seq->template emplace<BatchNormLayer<T>>(name + ".mid_bn", mid);
      seq->template emplace<ReluLayer<T>>();
      seq->template emplace<Conv3dLayer<T>>(name + ".temporal", conv_spec(mid, out, {3, 1, 1}, {s, 1, 1}, {1, 0, 0}));
      return seq;
    }
  }
  throw ConfigError("unknown convolution kind");
}

template <class T>
LayerPtr<T> basic_block(const std::string& name, std::size_t in, std::size_t out, std::size_t stride, ConvKind kind) {
  const std::size_t mid = kind == ConvKind::factorized ? midplanes(in, out) : 0;
  auto main = std::make_unique<Sequential<T>>();
  main->add(conv_unit<T>(name + ".conv1", in, out, stride, kind, mid));
  main->template emplace<BatchNormLayer<T>>(name + ".bn1", out);
  main->template emplace<ReluLayer<T>>();
  main->add(conv_unit<T>(name + ".conv2", out, out, 1, kind, mid));
  main->template emplace<BatchNormLayer<T>>(name + ".bn2", out);
  std::unique_ptr<Sequential<T>> shortcut;
  if (stride != 1 || in != out) {
    shortcut = std::make_unique<Sequential<T>>();
    shortcut->template emplace<Conv3dLayer<T>>(
        name + ".down.conv", conv_spec(in, out, {1, 1, 1}, {stride, stride, stride}, {0, 0, 0}));
    shortcut->template emplace<BatchNormLayer<T>>(name + ".down.bn", out);
  }
  return std::make_unique<ResidualBlock<T>>(std::move(main), std::move(shortcut));
}

template <class T>
Network<T> build(const ArchSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::unique_ptr<Sequential<T>> body;
  switch (spec.family) {
    case Family::r3d:
    case Family::mc3:
    case Family::r2plus1d: body = build_resnet<T>(spec); break;
    case Family::i3d: body = build_i3d<T>(spec); break;
    case Family::rcn: body = build_rcn<T>(spec); break;
  }
  if (!body) throw ConfigError("unknown architecture family");
  Rng rng(seed);
  body->initialize(rng);
  return Network<T>(spec, std::move(body));
}

template class Network<float>;
template class Network<double>;
template Network<float> build(const ArchSpec&, std::uint64_t);
template Network<double> build(const ArchSpec&, std::uint64_t);
template LayerPtr<float> basic_block(const std::string&, std::size_t, std::size_t, std::size_t, ConvKind);
template LayerPtr<double> basic_block(const std::string&, std::size_t, std::size_t, std::size_t, ConvKind);
template LayerPtr<float> conv_unit(const std::string&, std::size_t, std::size_t, std::size_t, ConvKind, std::size_t);
template LayerPtr<double> conv_unit(const std::string&, std::size_t, std::size_t, std::size_t, ConvKind, std::size_t);

}  // namespace stfl
