#include <gtest/gtest.h>

#include "stfl/ops/batchnorm.hpp"
#include "stfl/ops/gradcheck.hpp"
#include "test_util.hpp"

using namespace stfl;
using stfl::testing::random_tensor;

namespace {

struct Stats {
  Tensord mean{Shape{3}, 0.0};
  Tensord var{Shape{3}, 1.0};
};

}  // namespace

TEST(BatchNorm, ConstantInputNormalizesToZero) {
  for (double c : {0.0, 3.5}) {
    Stats s;
    const auto out = batchnorm_forward(Tensord({2, 3, 2, 2, 2}, c), Tensord::ones({3}), Tensord::zeros({3}),
                                       NormMode::train, s.mean, s.var);
    for (double v : out.output.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(BatchNorm, TrainModeStandardizesEachChannel) {
  Stats s;
  Tensord x = random_tensor({4, 3, 2, 5, 5}, 7, -3.0, 5.0);
  const auto out = batchnorm_forward(x, Tensord::ones({3}), Tensord::zeros({3}), NormMode::train, s.mean, s.var);
  const std::size_t inner = 50;
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < inner; ++i) mean += out.output[(n * 3 + c) * inner + i];
    mean /= 200.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < inner; ++i) {
        const double d = out.output[(n * 3 + c) * inner + i] - mean;
        sq += d * d;
      }
    EXPECT_LT(std::abs(mean), 1e-6);
    EXPECT_LT(std::abs(sq / 200.0 - 1.0), 1e-5);
  }
}

TEST(BatchNorm, RunningStatisticsUpdateWithMomentum) {
  Stats s;
  Tensord x({2, 3, 1, 1, 1}, std::vector<double>{1, 2, 3, 3, 4, 5});
  (void)batchnorm_forward(x, Tensord::ones({3}), Tensord::zeros({3}), NormMode::train, s.mean, s.var);
  // channel 0: samples {1, 3}: mean 2, unbiased var 2
  EXPECT_NEAR(s.mean[0], 0.1 * 2.0, 1e-12);
  EXPECT_NEAR(s.var[0], 0.9 * 1.0 + 0.1 * 2.0, 1e-12);
}

TEST(BatchNorm, EvalModeUsesRunningStatistics) {
  Stats s;
  s.mean = Tensord({3}, std::vector<double>{1.0, 0.0, -1.0});
  s.var = Tensord({3}, std::vector<double>{4.0, 1.0, 0.25});
  Tensord x({1, 3, 1, 1, 1}, std::vector<double>{3.0, 2.0, 0.0});
  const Tensord gamma({3}, std::vector<double>{1.0, 2.0, 1.0});
  const Tensord beta({3}, std::vector<double>{0.0, 0.0, 0.5});
  const auto out = batchnorm_forward(x, gamma, beta, NormMode::eval, s.mean, s.var, {0.0, 0.1});
  EXPECT_DOUBLE_EQ(out.output[0], 1.0);
  EXPECT_DOUBLE_EQ(out.output[1], 4.0);
  EXPECT_DOUBLE_EQ(out.output[2], 2.5);
  EXPECT_EQ(s.mean[0], 1.0);
}

TEST(BatchNorm, SingleElementWithZeroEpsilonIsNumericError) {
  Tensord mean({1}), var({1}, 1.0);
  EXPECT_THROW((void)batchnorm_forward(Tensord({1, 1}, 2.0), Tensord::ones({1}), Tensord::zeros({1}),
                                       NormMode::train, mean, var, {0.0, 0.1}),
               NumericError);
}

TEST(BatchNorm, GammaLengthMismatchRejected) {
  Stats s;
  EXPECT_THROW((void)batchnorm_forward(Tensord({1, 3, 2}), Tensord::ones({2}), Tensord::zeros({3}), NormMode::train,
                                       s.mean, s.var),
               DimensionError);
}

TEST(BatchNorm, GradcheckTrainAndEval) {
  for (NormMode mode : {NormMode::train, NormMode::eval}) {
    Tensord x = random_tensor({2, 3, 2, 4, 4}, 21, -2.0, 2.0);
    Tensord gamma = random_tensor({3}, 22, 0.5, 1.5);
    Tensord beta = random_tensor({3}, 23);
    Stats s;
    s.mean = random_tensor({3}, 24);
    s.var = random_tensor({3}, 25, 0.5, 2.0);
    Stats probe = s;
    const auto fwd = batchnorm_forward(x, gamma, beta, mode, probe.mean, probe.var);
    const Tensord r = random_tensor(x.shape(), 26);
    const auto g = batchnorm_backward(r, fwd.context);
    const std::vector<GradcheckTarget> targets{{"input", x.data(), g.input.data()},
                                               {"gamma", gamma.data(), g.gamma.data()},
                                               {"beta", beta.data(), g.beta.data()}};
    const auto report = gradcheck("batchnorm", [&] {
      Stats scratch = s;
      const auto y = batchnorm_forward(x, gamma, beta, mode, scratch.mean, scratch.var);
      double acc = 0.0;
      for (std::size_t i = 0; i < r.numel(); ++i) acc += y.output[i] * r[i];
      return acc;
    }, targets);
    EXPECT_LT(report.max_error(), 1e-4) << (mode == NormMode::train ? "train" : "eval");
  }
}
