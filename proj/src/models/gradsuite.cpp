#include "stfl/models/gradsuite.hpp"

#include <random>

#include "stfl/models/network.hpp"
#include "stfl/ops/loss.hpp"

namespace stfl {

namespace {

Tensord seeded(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensord t(shape);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

double probe(const Tensord& y, const Tensord& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.numel(); ++i) s += y[i] * r[i];
  return s;
}

Conv3dSpec small_conv() {
  Conv3dSpec spec;
  spec.in_channels = 2;
  spec.out_channels = 3;
  spec.kernel = {3, 3, 3};
  spec.stride = {1, 2, 2};
  spec.padding = {1, 1, 1};
  spec.has_bias = true;
  return spec;
}

/// Checks a layer's input and trainable parameters against the loss <layer(x), r>.
GradcheckReport check_layer(const std::string& op, Layer<double>& layer, Tensord x, const GradcheckOptions& options,
                            std::uint64_t seed) {
  Rng rng(seed);
  layer.initialize(rng);
  std::vector<Parameter<double>*> params;
  layer.collect(params);
  // Perturb batch-norm affine terms away from (1, 0) so their gradients are generic.
  for (auto* p : params) {
    if (!p->trainable) continue;
    if (p->name.ends_with(".gamma")) p->value = seeded(p->value.shape(), seed++, 0.5, 1.5);
    if (p->name.ends_with(".beta")) p->value = seeded(p->value.shape(), seed++, -0.5, 0.5);
  }
  const Tensord y = layer.forward(x, NormMode::train);
  const Tensord r = seeded(y.shape(), seed + 1000);
  for (auto* p : params) p->grad = Tensord(p->value.shape());
  const Tensord gx = layer.backward(r);
  std::vector<GradcheckTarget> targets{{"input", x.data(), gx.data()}};
  for (auto* p : params) {
    if (p->trainable) targets.push_back({p->name, p->value.data(), p->grad.data()});
  }
  return gradcheck(op, [&] { return probe(layer.forward(x, NormMode::train), r); }, targets, options);
}

GradcheckReport check_conv(const GradcheckOptions& o) {
  const Conv3dSpec spec = small_conv();
  Tensord x = seeded({2, 2, 4, 6, 6}, 1);
  Tensord w = seeded(spec.weight_shape(), 2);
  Tensord b = seeded({3}, 3);
  const auto fwd = conv3d_forward(x, spec, w, &b);
  const Tensord r = seeded(fwd.output.shape(), 4);
  const auto g = conv3d_backward(r, fwd.context);
  const std::vector<GradcheckTarget> t{
      {"input", x.data(), g.input.data()}, {"weights", w.data(), g.weights.data()}, {"bias", b.data(), g.bias->data()}};
  return gradcheck("conv3d", [&] { return probe(conv3d(x, spec, w, &b), r); }, t, o);
}

GradcheckReport check_batchnorm(const GradcheckOptions& o) {
  Tensord x = seeded({2, 3, 2, 4, 4}, 11, -2.0, 2.0);
  Tensord gamma = seeded({3}, 12, 0.5, 1.5);
  Tensord beta = seeded({3}, 13);
  Tensord mean({3}), var({3}, 1.0);
  const auto fwd = batchnorm_forward(x, gamma, beta, NormMode::train, mean, var);
  const Tensord r = seeded(x.shape(), 14);
  const auto g = batchnorm_backward(r, fwd.context);
  const std::vector<GradcheckTarget> t{{"input", x.data(), g.input.data()},
                                       {"gamma", gamma.data(), g.gamma.data()},
                                       {"beta", beta.data(), g.beta.data()}};
  return gradcheck("batchnorm", [&] {
    Tensord m({3}), v({3}, 1.0);
    return probe(batchnorm_forward(x, gamma, beta, NormMode::train, m, v).output, r);
  }, t, o);
}

GradcheckReport check_linear_relu(const GradcheckOptions& o) {
  Tensord x = seeded({4, 6}, 21);
  Tensord w = seeded({5, 6}, 22);
  Tensord b = seeded({5}, 23);
  const Tensord r = seeded({4, 5}, 24);
  const auto fwd = linear_forward(x, w, &b);
  const auto g = linear_backward(relu_backward(r, fwd.output), fwd.context);
  const std::vector<GradcheckTarget> t{
      {"input", x.data(), g.input.data()}, {"weights", w.data(), g.weights.data()}, {"bias", b.data(), g.bias->data()}};
  return gradcheck("linear_relu", [&] { return probe(relu(linear(x, w, &b)), r); }, t, o);
}

GradcheckReport check_avg_pool(const GradcheckOptions& o) {
  Pool3dSpec spec;
  spec.kind = PoolKind::avg;
  spec.window = {2, 3, 3};
  spec.stride = {1, 2, 2};
  spec.padding = {0, 1, 1};
  Tensord x = seeded({2, 2, 4, 5, 5}, 31);
  const auto fwd = pool3d_forward(x, spec);
  const Tensord r = seeded(fwd.output.shape(), 32);
  const Tensord g = pool3d_backward(r, fwd.context);
  const std::vector<GradcheckTarget> t{{"input", x.data(), g.data()}};
  return gradcheck("pool3d_avg", [&] { return probe(pool3d(x, spec), r); }, t, o);
}

GradcheckReport check_lstm(const GradcheckOptions& o) {
  const LstmSpec spec{3, 4, 2};
  Tensord x = seeded({3, 2, 3}, 41);
  LstmParams<double> p = LstmParams<double>::zeros(spec);
  std::uint64_t s = 42;
  for (auto& l : p.layers) {
    l.w_ih = seeded(l.w_ih.shape(), s++, -0.5, 0.5);
    l.w_hh = seeded(l.w_hh.shape(), s++, -0.5, 0.5);
    l.b_ih = seeded(l.b_ih.shape(), s++, -0.5, 0.5);
    l.b_hh = seeded(l.b_hh.shape(), s++, -0.5, 0.5);
  }
  const Tensord r = seeded({3, 2, 4}, 60);
  const auto fwd = lstm_sequence(x, spec, p);
  const auto g = lstm_backward(r, fwd.context);
  std::vector<GradcheckTarget> t{{"inputs", x.data(), g.inputs.data()}};
  for (std::size_t l = 0; l < spec.num_layers; ++l) {
    const std::string tag = "l" + std::to_string(l);
    t.push_back({tag + ".w_ih", p.layers[l].w_ih.data(), g.params[l].w_ih.data()});
    t.push_back({tag + ".w_hh", p.layers[l].w_hh.data(), g.params[l].w_hh.data()});
    t.push_back({tag + ".b_ih", p.layers[l].b_ih.data(), g.params[l].b_ih.data()});
    t.push_back({tag + ".b_hh", p.layers[l].b_hh.data(), g.params[l].b_hh.data()});
  }
  return gradcheck("lstm_sequence", [&] { return probe(lstm_sequence(x, spec, p).outputs, r); }, t, o);
}

GradcheckReport check_cross_entropy(const GradcheckOptions& o) {
  Tensord logits = seeded({4, 2}, 71, -2.0, 2.0);
  const std::vector<int> labels{0, 1, 1, 0};
  const std::vector<double> weights{5.28, 0.55};
  const auto res = weighted_softmax_cross_entropy(logits, labels, weights);
  const std::vector<GradcheckTarget> t{{"logits", logits.data(), res.grad_logits.data()}};
  return gradcheck("weighted_cross_entropy",
                   [&] { return weighted_softmax_cross_entropy(logits, labels, weights).loss; }, t, o);
}

}  // namespace

std::vector<GradcheckReport> run_gradient_suite(const GradcheckOptions& options) {
  std::vector<GradcheckReport> reports;
  reports.push_back(check_conv(options));
  reports.push_back(check_batchnorm(options));
  reports.push_back(check_linear_relu(options));
  reports.push_back(check_avg_pool(options));
  reports.push_back(check_lstm(options));
  reports.push_back(check_cross_entropy(options));
  {
    auto block = basic_block<double>("r2plus1d_block", 3, 4, 2, ConvKind::factorized);
    reports.push_back(check_layer("r2plus1d_block", *block, seeded({2, 3, 4, 6, 6}, 81), options, 82));
  }
  {
    auto block = basic_block<double>("residual_block", 3, 4, 2, ConvKind::full3d);
    reports.push_back(check_layer("residual_block", *block, seeded({2, 3, 4, 6, 6}, 91), options, 92));
  }
  return reports;
}

}  // namespace stfl
