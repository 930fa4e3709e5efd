#include "stfl/data/sample.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "stfl/data/clip_io.hpp"
#include "stfl/data/image.hpp"
#include "stfl/error.hpp"

namespace stfl {

std::size_t precrop_size(std::size_t target) {
  return static_cast<std::size_t>(std::lround(static_cast<double>(target) * 8.0 / 7.0));
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ClipWindow plan_window(std::size_t frames, std::size_t h, std::size_t w, std::size_t length, std::size_t target,
                       SampleMode mode, std::uint64_t seed) {
  if (length == 0 || target == 0) throw DataError("sample_clip: length and target size must be positive");
  if (frames < length) {
    throw DataError("sample_clip: clip has " + std::to_string(frames) + " frames, need " + std::to_string(length));
  }
  ClipWindow win;
  // Short side to the pre-crop size, aspect preserved, never below the target.
  const std::size_t pre = precrop_size(target);
  const double scale = static_cast<double>(pre) / static_cast<double>(std::min(h, w));
  win.resized_h = std::max(target, h <= w ? pre : static_cast<std::size_t>(std::lround(h * scale)));
  win.resized_w = std::max(target, w <= h ? pre : static_cast<std::size_t>(std::lround(w * scale)));
  const std::size_t span_t = frames - length, span_h = win.resized_h - target, span_w = win.resized_w - target;
  if (mode == SampleMode::eval) {
    win.start = span_t / 2;
    win.top = span_h / 2;
    win.left = span_w / 2;
  } else {
    std::mt19937_64 rng(seed);
    win.start = std::uniform_int_distribution<std::size_t>(0, span_t)(rng);
    win.top = std::uniform_int_distribution<std::size_t>(0, span_h)(rng);
    win.left = std::uniform_int_distribution<std::size_t>(0, span_w)(rng);
  }
  return win;
}

Tensorf extract_clip(const Tensorf& source, const ClipWindow& win, std::size_t length, std::size_t target) {
  if (source.rank() != 4 || source.dim(0) != 3) {
    throw DimensionError("sample_clip: expected (3,T,H,W) source, got " + shape_str(source.shape()));
  }
  if (win.start + length > source.dim(1) || win.top + target > win.resized_h || win.left + target > win.resized_w) {
    throw DataError("sample_clip: window exceeds the source bounds");
  }
  Tensorf out({3, length, target, target});
  const std::size_t plane = target * target;
  for (std::size_t t = 0; t < length; ++t) {
    const Tensorf frame = resize_bilinear(clip_frame(source, win.start + t), win.resized_h, win.resized_w);
    for (std::size_t c = 0; c < 3; ++c) {
      float* dst = out.raw() + (c * length + t) * plane;
      for (std::size_t y = 0; y < target; ++y)
        std::copy_n(&frame.at(c, win.top + y, win.left), target, dst + y * target);
    }
  }
  return out;
}

Tensorf sample_clip(const Tensorf& source, std::size_t length, std::size_t target, SampleMode mode,
                    std::uint64_t seed) {
  if (source.rank() != 4) throw DimensionError("sample_clip: expected (3,T,H,W), got " + shape_str(source.shape()));
  const ClipWindow win = plan_window(source.dim(1), source.dim(2), source.dim(3), length, target, mode, seed);
  return extract_clip(source, win, length, target);
}

Tensorf sample_clip(const std::filesystem::path& clip_file, std::size_t length, std::size_t target, SampleMode mode,
                    std::uint64_t seed) {
  return sample_clip(read_clip(clip_file), length, target, mode, seed);
}

std::vector<std::size_t> eval_starts(std::size_t frames, std::size_t length, std::size_t count) {
  if (frames < length) {
    throw DataError("sample_clip: clip has " + std::to_string(frames) + " frames, need " + std::to_string(length));
  }
  if (count == 0) throw DataError("eval_starts: clip count must be positive");
  const std::size_t span = frames - length;
  if (count == 1) return {span / 2};
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = static_cast<std::size_t>(
        std::lround(static_cast<double>(span) * static_cast<double>(i) / static_cast<double>(count - 1)));
  }
  return out;
}

ChannelStats channel_stats(std::span<const Tensorf> clips) {
  if (clips.empty()) throw DataError("channel_stats: no clips");
  std::array<double, 3> sum{}, sq{};
  std::array<std::size_t, 3> n{};
  for (const Tensorf& clip : clips) {
    if (clip.rank() < 2 || clip.dim(0) != 3) {
      throw DimensionError("channel_stats: expected (3,...), got " + shape_str(clip.shape()));
    }
    const std::size_t per = clip.numel() / 3;
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < per; ++i) {
        const double v = clip[c * per + i];
        sum[c] += v;
        sq[c] += v * v;
      }
      n[c] += per;
    }
  }
  ChannelStats s;
  for (std::size_t c = 0; c < 3; ++c) {
    const double N = static_cast<double>(n[c]);
    s.mean[c] = sum[c] / N;
    s.std[c] = std::sqrt(std::max(0.0, sq[c] / N - s.mean[c] * s.mean[c]));
  }
  return s;
}

namespace {

// Applies fn(value, channel) across a (3,...) or (N,3,...) tensor.
template <class Fn>
void per_channel(Tensorf& x, const ChannelStats& stats, Fn fn) {
  for (double sd : stats.std)
    if (!(sd > 0.0) || !std::isfinite(sd)) throw NumericError("normalize: channel std must be positive and finite");
  // Rank 5 is a batch (N,3,T,H,W); lower ranks start with the channel axis.
  const std::size_t axis = x.rank() == 5 ? 1 : 0;
  const std::size_t outer = axis == 1 ? x.dim(0) : 1;
  if (x.rank() < 2 || x.dim(axis) != 3) {
    throw DimensionError("normalize: expected 3 channels, got " + shape_str(x.shape()));
  }
  const std::size_t inner = x.numel() / (outer * 3);
  float* p = x.raw();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < inner; ++i, ++p) *p = static_cast<float>(fn(static_cast<double>(*p), c));
}

}  // namespace

void normalize(Tensorf& clip, const ChannelStats& stats) {
  per_channel(clip, stats, [&](double v, std::size_t c) { return (v - stats.mean[c]) / stats.std[c]; });
}

void denormalize(Tensorf& clip, const ChannelStats& stats) {
  per_channel(clip, stats, [&](double v, std::size_t c) { return v * stats.std[c] + stats.mean[c]; });
}

}  // namespace stfl
