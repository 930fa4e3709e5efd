#include <gtest/gtest.h>

#include "stfl/ops/gradcheck.hpp"
#include "stfl/ops/lstm.hpp"
#include "test_util.hpp"

using namespace stfl;
using stfl::testing::random_tensor;

namespace {

LstmParams<double> random_params(const LstmSpec& spec, std::uint64_t seed) {
  LstmParams<double> p = LstmParams<double>::zeros(spec);
  for (auto& layer : p.layers) {
    layer.w_ih = random_tensor(layer.w_ih.shape(), seed++, -0.5, 0.5);
    layer.w_hh = random_tensor(layer.w_hh.shape(), seed++, -0.5, 0.5);
    layer.b_ih = random_tensor(layer.b_ih.shape(), seed++, -0.5, 0.5);
    layer.b_hh = random_tensor(layer.b_hh.shape(), seed++, -0.5, 0.5);
  }
  return p;
}

}  // namespace

TEST(Lstm, ZeroWeightsGiveZeroOutputs) {
  const LstmSpec spec{3, 4, 2};
  const auto out = lstm_sequence(random_tensor({5, 2, 3}, 1), spec, LstmParams<double>::zeros(spec));
  ASSERT_EQ(out.outputs.shape(), (Shape{5, 2, 4}));
  for (double v : out.outputs.data()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(out.final_state.h.shape(), (Shape{2, 2, 4}));
}

TEST(Lstm, ScalarRecurrenceMatchesHandComputation) {
  const LstmSpec spec{1, 1, 1};
  LstmParams<double> p = LstmParams<double>::zeros(spec);
  p.layers[0].w_ih = Tensord({4, 1}, std::vector<double>{0.5, -0.3, 0.8, 0.2});
  p.layers[0].w_hh = Tensord({4, 1}, std::vector<double>{0.1, 0.4, -0.6, 0.3});
  p.layers[0].b_ih = Tensord({4}, std::vector<double>{0.05, 0.1, -0.2, 0.0});
  p.layers[0].b_hh = Tensord({4}, std::vector<double>{0.0, 0.2, 0.1, -0.1});
  const auto out = lstm_sequence(Tensord({2, 1, 1}, std::vector<double>{0.7, -1.2}), spec, p);
  EXPECT_NEAR(out.outputs[0], 0.1284904449105916, 1e-12);
  EXPECT_NEAR(out.outputs[1], -0.053853218615381934, 1e-12);
  EXPECT_NEAR(out.final_state.h[0], -0.053853218615381934, 1e-12);
  EXPECT_NEAR(out.final_state.c[0], -0.12733696071423536, 1e-12);
}

TEST(Lstm, InputWidthMismatchRejected) {
  const LstmSpec spec{3, 4, 1};
  EXPECT_THROW((void)lstm_sequence(Tensord({2, 1, 5}), spec, LstmParams<double>::zeros(spec)), DimensionError);
}

TEST(Lstm, GradcheckStackedLayers) {
  const LstmSpec spec{3, 4, 2};
  Tensord x = random_tensor({3, 2, 3}, 11);
  LstmParams<double> p = random_params(spec, 20);
  const Tensord r = random_tensor({3, 2, 4}, 12);
  const auto fwd = lstm_sequence(x, spec, p);
  const auto g = lstm_backward(r, fwd.context);
  std::vector<GradcheckTarget> targets{{"inputs", x.data(), g.inputs.data()}};
  for (std::size_t l = 0; l < spec.num_layers; ++l) {
    const std::string tag = "layer" + std::to_string(l);
    targets.push_back({tag + ".w_ih", p.layers[l].w_ih.data(), g.params[l].w_ih.data()});
    targets.push_back({tag + ".w_hh", p.layers[l].w_hh.data(), g.params[l].w_hh.data()});
    targets.push_back({tag + ".b_ih", p.layers[l].b_ih.data(), g.params[l].b_ih.data()});
    targets.push_back({tag + ".b_hh", p.layers[l].b_hh.data(), g.params[l].b_hh.data()});
  }
  const auto report = gradcheck("lstm", [&] {
    const auto y = lstm_sequence(x, spec, p);
    double s = 0.0;
    for (std::size_t i = 0; i < r.numel(); ++i) s += y.outputs[i] * r[i];
    return s;
  }, targets);
  for (const auto& e : report.entries) EXPECT_LT(e.max_rel_error, 1e-4) << e.name;
}
