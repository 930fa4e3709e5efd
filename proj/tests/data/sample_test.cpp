#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <mutex>
#include <set>

#include "stfl/data/clip_io.hpp"
#include "stfl/data/sample.hpp"
#include "stfl/data/synth.hpp"
#include "stfl/error.hpp"
#include "stfl/parallel.hpp"
#include "test_util.hpp"

using namespace stfl;
using stfl::testing::random_tensor;

namespace {

// Channel 0 of every frame holds its frame index / 1000.
Tensorf indexed_clip(std::size_t T, std::size_t H, std::size_t W) {
  Tensorf clip = random_tensor<float>({3, T, H, W}, 9, 0.0, 1.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) clip.at(0, t, y, x) = static_cast<float>(t) / 1000.0f;
  return clip;
}

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Precrop, ArchitectureSizes) {
  EXPECT_EQ(precrop_size(112), 128u);
  EXPECT_EQ(precrop_size(224), 256u);
  EXPECT_EQ(precrop_size(28), 32u);
}

TEST(Window, FullLengthClipStartsAtZero) {
  for (std::uint64_t s = 0; s < 50; ++s) EXPECT_EQ(plan_window(16, 32, 32, 16, 28, SampleMode::train, s).start, 0u);
}

TEST(Window, JitterStaysInRange) {
  std::set<std::size_t> starts;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto w = plan_window(100, 128, 128, 16, 112, SampleMode::train, s);
    EXPECT_LE(w.start, 84u);
    starts.insert(w.start);
  }
  EXPECT_EQ(*starts.begin(), 0u);
  EXPECT_EQ(*starts.rbegin(), 84u);
}

TEST(Window, CropNeverLeavesFrameFuzz) {
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const std::size_t h = 20 + s % 200, w = 20 + (s * 7) % 300;
    const std::size_t target = 8 + s % 13;
    const auto win = plan_window(40, h, w, 10, target, SampleMode::train, s);
    ASSERT_LE(win.top + target, win.resized_h);
    ASSERT_LE(win.left + target, win.resized_w);
    ASSERT_LE(win.start + 10, 40u);
    ASSERT_EQ(std::min(win.resized_h, win.resized_w), std::max(target, precrop_size(target)));
  }
}

TEST(Window, EvalIsCentred) {
  const auto w = plan_window(100, 128, 171, 16, 112, SampleMode::eval, 123);
  EXPECT_EQ(w.start, 42u);
  EXPECT_EQ(w.resized_h, 128u);
  EXPECT_EQ(w.resized_w, 171u);
  EXPECT_EQ(w.top, 8u);
  EXPECT_EQ(w.left, 29u);
  const auto again = plan_window(100, 128, 171, 16, 112, SampleMode::eval, 999);
  EXPECT_EQ(again.start, w.start);
  EXPECT_EQ(again.left, w.left);
}

TEST(Window, ShortClipIsDataError) {
  EXPECT_THROW((void)plan_window(9, 32, 32, 10, 28, SampleMode::train, 0), DataError);
}

TEST(SampleClip, FramesAreConsecutive) {
  const Tensorf src = indexed_clip(40, 32, 32);
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Tensorf clip = sample_clip(src, 10, 28, SampleMode::train, s);
    ASSERT_EQ(clip.shape(), (Shape{3, 10, 28, 28}));
    const float first = clip.at(0, 0, 0, 0);
    for (std::size_t t = 0; t < 10; ++t) {
      EXPECT_NEAR(clip.at(0, t, 5, 7), first + static_cast<float>(t) / 1000.0f, 1e-6);
    }
  }
}

TEST(SampleClip, EvalOfPrecropSizedSourceIsCentreCrop) {
  const Tensorf src = random_tensor<float>({3, 20, 32, 32}, 3);
  const Tensorf clip = sample_clip(src, 16, 28, SampleMode::eval, 0);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t t = 0; t < 16; ++t)
      for (std::size_t y = 0; y < 28; ++y)
        for (std::size_t x = 0; x < 28; ++x) ASSERT_EQ(clip.at(c, t, y, x), src.at(c, t + 2, y + 2, x + 2));
}

TEST(SampleClip, RcnLengthTen) {
  const Tensorf clip = sample_clip(random_tensor<float>({3, 16, 32, 32}, 4), 10, 28, SampleMode::train, 1);
  EXPECT_EQ(clip.dim(1), 10u);
}

TEST(SampleClip, WindowsIndependentOfWorkerCount) {
  const auto collect = [](std::size_t workers) {
    set_worker_count(workers);
    std::vector<std::size_t> starts(64);
    parallel_for(64, [&](std::size_t i) {
      const auto w = plan_window(100, 40, 50, 16, 28, SampleMode::train, mix_seed(5, i));
      starts[i] = w.start * 1000000 + w.top * 1000 + w.left;
    });
    return starts;
  };
  const auto a = collect(1), b = collect(4);
  set_worker_count(0);
  EXPECT_EQ(a, b);
}

TEST(EvalStarts, EvenlySpaced) {
  EXPECT_EQ(eval_starts(100, 16, 1), (std::vector<std::size_t>{42}));
  EXPECT_EQ(eval_starts(100, 16, 3), (std::vector<std::size_t>{0, 42, 84}));
  EXPECT_THROW((void)eval_starts(5, 16, 1), DataError);
}

TEST(Normalize, IdentityConstantAndRoundTrip) {
  const Tensorf x = random_tensor<float>({3, 4, 5, 5}, 6, 0.0, 1.0);
  Tensorf y = x;
  normalize(y, ChannelStats{});
  EXPECT_TRUE(y == x);

  ChannelStats s{{0.2, 0.4, 0.6}, {0.1, 0.5, 2.0}};
  Tensorf c({3, 2, 2, 2});
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t i = 0; i < 8; ++i) c[ch * 8 + i] = static_cast<float>(s.mean[ch]);
  normalize(c, s);
  for (float v : c.data()) EXPECT_NEAR(v, 0.0f, 1e-7);

  Tensorf z = x;
  normalize(z, s);
  denormalize(z, s);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(z[i], x[i], 1e-6);
}

TEST(Normalize, BatchLayoutUsesAxisOne) {
  Tensorf b({3, 3, 1, 1, 2}, 1.0f);
  normalize(b, ChannelStats{{0.0, 1.0, 2.0}, {1.0, 1.0, 1.0}});
  EXPECT_EQ(b.at(2, 0, 0, 0, 1), 1.0f);
  EXPECT_EQ(b.at(2, 1, 0, 0, 1), 0.0f);
  EXPECT_EQ(b.at(0, 2, 0, 0, 0), -1.0f);
}

TEST(Normalize, ZeroStdIsNumericError) {
  Tensorf x({3, 1, 2, 2});
  EXPECT_THROW(normalize(x, ChannelStats{{0, 0, 0}, {1, 0, 1}}), NumericError);
}

TEST(ChannelStats, TwoPassOracle) {
  const std::vector<Tensorf> clips{random_tensor<float>({3, 2, 3, 3}, 7), random_tensor<float>({3, 4, 3, 3}, 8)};
  const ChannelStats s = channel_stats(clips);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> v;
    for (const auto& clip : clips) {
      const std::size_t per = clip.numel() / 3;
      for (std::size_t i = 0; i < per; ++i) v.push_back(clip[c * per + i]);
    }
    double mean = 0.0;
    for (double a : v) mean += a;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double a : v) ss += (a - mean) * (a - mean);
    EXPECT_NEAR(s.mean[c], mean, 1e-12);
    EXPECT_NEAR(s.std[c], std::sqrt(ss / static_cast<double>(v.size())), 1e-9);
  }
}

TEST(Synth, SameSeedGivesIdenticalFiles) {
  SynthConfig cfg;
  cfg.n_real = 3;
  cfg.n_fake = 3;
  cfg.frames = 4;
  cfg.hw = 16;
  cfg.seed = 11;
  const auto root = std::filesystem::temp_directory_path() / "stfl_synth_test";
  std::filesystem::remove_all(root);
  const Manifest a = synth_dataset(cfg, root / "a");
  const Manifest b = synth_dataset(cfg, root / "b");
  ASSERT_EQ(a.records.size(), 6u);
  EXPECT_EQ(file_bytes(root / "a/manifest.csv"), file_bytes(root / "b/manifest.csv"));
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].path, b.records[i].path);
    EXPECT_EQ(file_bytes(a.resolve(a.records[i])), file_bytes(b.resolve(b.records[i])));
  }
  const Tensorf clip = read_clip(a.resolve(a.records[0]));
  EXPECT_EQ(clip.shape(), (Shape{3, 4, 16, 16}));
  for (float v : clip.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Synth, StratifiedSplit) {
  SynthConfig cfg;
  cfg.n_real = 50;
  cfg.n_fake = 30;
  cfg.frames = 1;
  cfg.hw = 4;
  const auto root = std::filesystem::temp_directory_path() / "stfl_synth_split";
  std::filesystem::remove_all(root);
  const Manifest m = synth_dataset(cfg, root);
  EXPECT_EQ(m.counts(Split::test)[0], 10u);
  EXPECT_EQ(m.counts(Split::test)[1], 6u);
  EXPECT_EQ(m.counts(Split::train)[0], 40u);
  EXPECT_EQ(load_manifest(root / "manifest.csv").records.size(), 80u);
}

TEST(Synth, ArtifactsStayInsideCentredPatch) {
  SynthConfig cfg;
  cfg.hw = 32;
  cfg.frames = 3;
  SynthConfig null_cfg = cfg;
  null_cfg.artifact_strength = 0.0;
  const Tensorf fake = synth_clip(cfg, kFake, 4);
  const Tensorf base = synth_clip(null_cfg, kFake, 4);
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x) {
      const bool inside = y >= 8 && y < 24 && x >= 8 && x < 24;
      if (!inside) {
        ASSERT_EQ(fake.at(1, 2, y, x), base.at(1, 2, y, x));
      }
    }
  double diff = 0.0;
  for (std::size_t y = 8; y < 24; ++y)
    for (std::size_t x = 8; x < 24; ++x) diff += std::abs(fake.at(1, 2, y, x) - base.at(1, 2, y, x));
  EXPECT_GT(diff / 256.0, 0.02);
}

TEST(Synth, NullStrengthClassesIndistinguishable) {
  // Welch t-test on per-clip pixel means and variances at the 1% level.
  SynthConfig cfg;
  cfg.frames = 4;
  cfg.hw = 16;
  cfg.artifact_strength = 0.0;
  cfg.seed = 3;
  const auto moments = [&](int label, std::vector<double>& means, std::vector<double>& vars) {
    for (std::size_t i = 0; i < 150; ++i) {
      const Tensorf c = synth_clip(cfg, label, i);
      double m = 0.0, q = 0.0;
      for (float v : c.data()) m += v;
      m /= static_cast<double>(c.numel());
      for (float v : c.data()) q += (v - m) * (v - m);
      means.push_back(m);
      vars.push_back(q / static_cast<double>(c.numel()));
    }
  };
  const auto welch = [](const std::vector<double>& a, const std::vector<double>& b) {
    const auto ms = [](const std::vector<double>& v, double& mean, double& var) {
      mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      var /= static_cast<double>(v.size() - 1);
    };
    double ma, va, mb, vb;
    ms(a, ma, va);
    ms(b, mb, vb);
    return (ma - mb) / std::sqrt(va / a.size() + vb / b.size());
  };
  std::vector<double> rm, rv, fm, fv;
  moments(kReal, rm, rv);
  moments(kFake, fm, fv);
  EXPECT_LT(std::abs(welch(rm, fm)), 2.576);
  EXPECT_LT(std::abs(welch(rv, fv)), 2.576);
}

TEST(Synth, InvalidConfigRejected) {
  SynthConfig cfg;
  cfg.n_fake = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.n_fake = 1;
  cfg.artifact_strength = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
