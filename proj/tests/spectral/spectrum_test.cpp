#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <map>
#include <numbers>

#include "stfl/spectral/spectrum.hpp"
#include "test_util.hpp"

using namespace stfl;
using stfl::testing::random_tensor;

namespace {

std::complex<double> naive_dft(const Tensord& x, std::size_t k, std::size_t l) {
  const double H = static_cast<double>(x.dim(0)), W = static_cast<double>(x.dim(1));
  std::complex<double> acc = 0.0;
  for (std::size_t m = 0; m < x.dim(0); ++m)
    for (std::size_t n = 0; n < x.dim(1); ++n) {
      const double phase = -2.0 * std::numbers::pi * (static_cast<double>(k * m) / H + static_cast<double>(l * n) / W);
      acc += x.at(m, n) * std::polar(1.0, phase);
    }
  return acc;
}

// Groups every pixel by its rounded distance to (H/2, W/2).
std::vector<double> ring_oracle(const Tensord& s) {
  const long H = s.dim(0), W = s.dim(1);
  std::map<long, std::pair<double, long>> rings;
  for (long y = 0; y < H; ++y)
    for (long x = 0; x < W; ++x) {
      const double dy = y - H / 2, dx = x - W / 2;
      const long r = std::lround(std::sqrt(dy * dy + dx * dx));
      rings[r].first += s.at(y, x);
      rings[r].second += 1;
    }
  const long r_max = std::min(H, W) / 2 - 1;
  std::vector<double> out;
  for (long r = 0; r <= r_max; ++r) out.push_back(rings[r].first / rings[r].second);
  return out;
}

}  // namespace

TEST(Spectrum, ConstantFrameHasOnlyDc) {
  const double c = 0.7;
  const Tensord s = amplitude_spectrum(Tensord({8, 6}, c));
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 6; ++x) {
      if (y == 4 && x == 3) {
        EXPECT_NEAR(s.at(y, x), std::log(1.0 + c * 48.0), 1e-12);
      } else {
        EXPECT_NEAR(s.at(y, x), 0.0, 1e-12);
      }
    }
}

TEST(Spectrum, Parseval) {
  const Tensord x = random_tensor({12, 10}, 1);
  const auto F = dft2d(x);
  double lhs = 0.0, rhs = 0.0;
  for (const auto& f : F) lhs += std::norm(f);
  for (double v : x.data()) rhs += v * v;
  rhs *= 120.0;
  EXPECT_LT(std::abs(lhs - rhs) / rhs, 1e-9);
}

TEST(Spectrum, MatchesDirectSummation) {
  for (std::size_t n : {4u, 5u, 8u, 11u, 16u}) {
    const Tensord x = random_tensor({n, n + (n % 3)}, 10 + n);
    const auto F = dft2d(x);
    for (std::size_t k = 0; k < x.dim(0); ++k)
      for (std::size_t l = 0; l < x.dim(1); ++l)
        EXPECT_LT(std::abs(F[k * x.dim(1) + l] - naive_dft(x, k, l)), 1e-9) << n;
  }
}

TEST(Spectrum, ShiftPlacesZeroFrequencyAtCenter) {
  const Tensord x = random_tensor({6, 6}, 2, 0.0, 1.0);
  const Tensord raw = amplitude_spectrum(x, AmplitudeMode::raw);
  EXPECT_NEAR(raw.at(3, 3), std::abs(naive_dft(x, 0, 0)), 1e-12);
  EXPECT_NEAR(raw.at(3, 4), std::abs(naive_dft(x, 0, 1)), 1e-12);
  EXPECT_NEAR(raw.at(0, 0), std::abs(naive_dft(x, 3, 3)), 1e-12);
}

TEST(Spectrum, NonFiniteFrameIsDataError) {
  Tensord x({8, 8});
  x[5] = std::nan("");
  EXPECT_THROW((void)amplitude_spectrum(x), DataError);
}

TEST(Azimuthal, ConstantSpectrumGivesConstantProfile) {
  for (double v : azimuthal_average(Tensord({9, 12}, 2.5))) EXPECT_DOUBLE_EQ(v, 2.5);
}

TEST(Azimuthal, FiveByFiveRings) {
  Tensord s({5, 5}, 7.0);
  for (std::size_t y = 1; y <= 3; ++y)
    for (std::size_t x = 1; x <= 3; ++x) s.at(y, x) = 2.0;
  s.at(2, 2) = 10.0;
  const auto p = azimuthal_average(s);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0], 10.0);
  EXPECT_EQ(p[1], 2.0);
}

TEST(Azimuthal, MatchesRingEnumerationForAllSmallShapes) {
  for (std::size_t H = 2; H <= 32; ++H)
    for (std::size_t W = 2; W <= 32; ++W) {
      const Tensord s = random_tensor({H, W}, H * 100 + W);
      EXPECT_EQ(azimuthal_average(s), ring_oracle(s)) << H << "x" << W;
    }
}

TEST(Feature, LengthAndNormalization) {
  const auto f = spectrum_feature(random_tensor({32, 32}, 3, 0.0, 1.0));
  ASSERT_EQ(f.values.size(), kFeatureLength);
  EXPECT_EQ(f.values[0], 1.0);
  for (double v : f.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Feature, ResampleEndpointsAndMidpoint) {
  const auto r = resample_linear({1.0, 3.0}, 300);
  ASSERT_EQ(r.size(), 300u);
  EXPECT_EQ(r.front(), 1.0);
  EXPECT_EQ(r.back(), 3.0);
  // 300 points: the midpoint 2.0 lies halfway between samples 149 and 150.
  EXPECT_NEAR(0.5 * (r[149] + r[150]), 2.0, 1e-12);
  EXPECT_NEAR(r[1] - r[0], 2.0 / 299.0, 1e-12);
}

TEST(Feature, ResampleOddLengthHitsMidpoint) {
  const auto r = resample_linear({1.0, 3.0}, 301);
  EXPECT_NEAR(r[150], 2.0, 1e-12);
}

TEST(Feature, RadiallyConstantProfileIsAllOnes) {
  const auto r = resample_linear(azimuthal_average(Tensord({16, 16}, 4.0)), kFeatureLength);
  for (double v : r) EXPECT_DOUBLE_EQ(v / r[0], 1.0);
}

TEST(Feature, RawModeIsScaleInvariant) {
  const Tensord x = random_tensor({24, 20}, 4, 0.0, 1.0);
  Tensord y = x;
  for (double& v : y.data()) v *= 3.7;
  const auto a = spectrum_feature(x, AmplitudeMode::raw);
  const auto b = spectrum_feature(y, AmplitudeMode::raw);
  for (std::size_t i = 0; i < kFeatureLength; ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-12);
}

TEST(Feature, ZeroFrameIsDegenerate) {
  EXPECT_THROW((void)spectrum_feature(Tensord({16, 16})), DataError);
}

TEST(Feature, TooSmallFrameRejected) {
  EXPECT_THROW((void)spectrum_feature(Tensord({6, 16}, 1.0)), DimensionError);
}

TEST(Feature, NeverNanForNonzeroMean) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto f = spectrum_feature(random_tensor({16, 16}, 50 + s, 0.0, 1.0));
    for (double v : f.values) EXPECT_FALSE(std::isnan(v));
  }
}

TEST(Grayscale, LuminanceWeights) {
  Tensorf rgb({3, 1, 2});
  rgb.at(0, 0, 0) = 1.0f;
  rgb.at(1, 0, 1) = 1.0f;
  const Tensord g = to_grayscale(rgb);
  EXPECT_DOUBLE_EQ(g.at(0, 0), 0.299);
  EXPECT_DOUBLE_EQ(g.at(0, 1), 0.587);
}
