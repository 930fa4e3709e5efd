#include <gtest/gtest.h>

#include "stfl/models/inflate.hpp"
#include "stfl/models/network.hpp"
#include "stfl/ops/conv.hpp"
#include "test_util.hpp"

using namespace stfl;
using stfl::testing::random_tensor;

using stfl::testing::constant_clip;
using stfl::testing::conv2d_oracle;
using stfl::testing::interior_gap;

TEST(Midplanes, SixtyFourToSixtyFour) {
  EXPECT_EQ(midplanes(64, 64, 3, 3), 144u);
  EXPECT_EQ(1u * 3 * 3 * 64 * 144 + 3u * 144 * 64, 3u * 3 * 3 * 64 * 64);
}

TEST(Midplanes, StemInput) { EXPECT_EQ(midplanes(3, 64, 3, 3), 23u); }

TEST(Midplanes, EqualWidthsGiveNineFourths) {
  for (std::size_t n : {1u, 2u, 5u, 16u, 63u, 128u, 511u})
    EXPECT_EQ(midplanes(n, n), 9 * n / 4) << n;
}

TEST(Midplanes, RejectsZero) { EXPECT_THROW((void)midplanes(0, 4), ConfigError); }

TEST(Inflate, SingleFrameIsIdentity) {
  const Tensord f = random_tensor({3, 2, 3, 3}, 1);
  const Tensord g = inflate_2d_to_3d(f, 1);
  ASSERT_EQ(g.shape(), (Shape{3, 2, 1, 3, 3}));
  for (std::size_t i = 0; i < f.numel(); ++i) EXPECT_EQ(g[i], f[i]);
}

TEST(Inflate, DividesByTemporalExtent) {
  const Tensorf g = inflate_2d_to_3d(Tensorf({2, 2, 3, 3}, 3.0f), 3);
  ASSERT_EQ(g.shape(), (Shape{2, 2, 3, 3, 3}));
  for (float v : g.data()) EXPECT_EQ(v, 1.0f);
}

TEST(Inflate, TemporalSumReproducesFilter) {
  const Tensord f = random_tensor({4, 3, 3, 3}, 2);
  for (std::size_t t : {2u, 3u, 4u, 7u}) {
    const Tensord g = inflate_2d_to_3d(f, t);
    for (std::size_t o = 0; o < 4; ++o)
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t a = 0; a < 3; ++a)
          for (std::size_t b = 0; b < 3; ++b) {
            double s = 0.0;
            for (std::size_t k = 0; k < t; ++k) s += g.at(o, c, k, a, b);
            // Division by a power of two is exact; otherwise rounding of f/t bounds the gap.
            if (t == 2 || t == 4) {
              EXPECT_EQ(s, f.at(o, c, a, b));
            } else {
              EXPECT_NEAR(s, f.at(o, c, a, b), 4e-16 * t);
            }
          }
  }
}

TEST(Inflate, StemOnConstantClipMatchesFrameConvolution) {
  Conv3dSpec spec;
  spec.in_channels = 3;
  spec.out_channels = 4;
  spec.kernel = {7, 7, 7};
  spec.stride = {2, 2, 2};
  spec.padding = {3, 3, 3};
  const Tensord f = random_tensor({4, 3, 7, 7}, 3);
  const Tensord frame = random_tensor({3, 20, 20}, 4);
  const std::size_t T = 16;
  const Tensord y3 = conv3d(constant_clip(frame, T), spec, inflate_2d_to_3d(f, 7));
  const Tensord y2 = conv2d_oracle(frame, f, 2, 3);
  EXPECT_LT(interior_gap(y3, y2, T, spec), 1e-5);
}

TEST(Inflate, EveryInflatedConvPreservesConstantResponse) {
  ArchSpec arch = ArchSpec::defaults(Family::i3d, 0.125);
  Network<double> net = build<double>(arch, 5);
  std::size_t checked = 0;
  for (auto* p : net.parameters()) {
    if (p->value.rank() != 5) continue;
    const Tensord& w = p->value;
    const std::size_t co = w.dim(0), ci = w.dim(1), kt = w.dim(2), k = w.dim(3);
    // Every temporal slice is identical and their sum is the source 2D filter.
    Tensord f({co, ci, k, k});
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t c = 0; c < ci; ++c)
        for (std::size_t t = 0; t < kt; ++t)
          for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) {
              EXPECT_EQ(w.at(o, c, t, a, b), w.at(o, c, 0, a, b)) << p->name;
              f.at(o, c, a, b) += w.at(o, c, t, a, b);
            }
    Conv3dSpec spec;
    spec.in_channels = ci;
    spec.out_channels = co;
    spec.kernel = {kt, k, k};
    spec.padding = {0, (k - 1) / 2, (k - 1) / 2};
    const Tensord frame = random_tensor({ci, 6, 6}, 100 + checked);
    const std::size_t T = kt + 2;
    const Tensord y3 = conv3d(constant_clip(frame, T), spec, w);
    const Tensord y2 = conv2d_oracle(frame, f, 1, (k - 1) / 2);
    EXPECT_LT(interior_gap(y3, y2, T, spec), 1e-5) << p->name;
    ++checked;
  }
  EXPECT_EQ(checked, 57u);
}
