#include <gtest/gtest.h>

#include "stfl/ops/dense.hpp"
#include "stfl/ops/gradcheck.hpp"
#include "test_util.hpp"

using namespace stfl;
using stfl::testing::random_tensor;

TEST(Relu, ClampsNegatives) {
  const Tensorf y = relu(Tensorf({3}, std::vector<float>{-1.0f, 0.0f, 2.0f}));
  EXPECT_EQ(y[0], 0.0f);
  EXPECT_EQ(y[1], 0.0f);
  EXPECT_EQ(y[2], 2.0f);
}

TEST(Relu, Idempotent) {
  const Tensord x = random_tensor({4, 5, 6}, 1);
  EXPECT_TRUE(relu(relu(x)) == relu(x));
}

TEST(Relu, BackwardMasksNonPositiveInputs) {
  const Tensord x({3}, std::vector<double>{-1.0, 0.0, 2.0});
  const Tensord g = relu_backward(Tensord({3}, std::vector<double>{5.0, 6.0, 7.0}), x);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_EQ(g[2], 7.0);
}

TEST(Linear, IdentityWeightsReturnInputPlusBias) {
  const Tensord x = random_tensor({3, 4}, 2);
  Tensord eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
  const Tensord b({4}, std::vector<double>{1, 2, 3, 4});
  const Tensord y = linear(x, eye, &b);
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(y.at(n, j), x.at(n, j) + b[j]);
}

TEST(Linear, MatchesHandComputedProduct) {
  const Tensord x({1, 2}, std::vector<double>{1.0, 2.0});
  const Tensord w({3, 2}, std::vector<double>{1, 0, 0, 1, 3, -1});
  const Tensord y = linear(x, w);
  EXPECT_EQ(y.shape(), (Shape{1, 3}));
  EXPECT_DOUBLE_EQ(y[0], 1.0);
  EXPECT_DOUBLE_EQ(y[1], 2.0);
  EXPECT_DOUBLE_EQ(y[2], 1.0);
}

TEST(Linear, InnerDimensionMismatch) {
  try {
    (void)linear(Tensord({2, 5}), Tensord({3, 4}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("inner dimension mismatch"), std::string::npos) << e.what();
  }
}

TEST(Linear, GradcheckComposedWithRelu) {
  Tensord x = random_tensor({4, 6}, 3);
  Tensord w = random_tensor({5, 6}, 4);
  Tensord b = random_tensor({5}, 5);
  const Tensord r = random_tensor({4, 5}, 6);
  const auto fwd = linear_forward(x, w, &b);
  const auto g = linear_backward(relu_backward(r, fwd.output), fwd.context);
  const std::vector<GradcheckTarget> targets{
      {"input", x.data(), g.input.data()}, {"weights", w.data(), g.weights.data()}, {"bias", b.data(), g.bias->data()}};
  const auto report = gradcheck("linear_relu", [&] {
    const Tensord y = relu(linear(x, w, &b));
    double s = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += y[i] * r[i];
    return s;
  }, targets);
  EXPECT_LT(report.max_error(), 1e-4);
}
