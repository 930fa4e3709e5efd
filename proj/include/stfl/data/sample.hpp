#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stfl/tensor.hpp"

namespace stfl {

enum class SampleMode { train, eval };

/// Short-side size frames are resized to before cropping to `target`
/// (112 -> 128, 224 -> 256).
std::size_t precrop_size(std::size_t target);

/// Where a clip is cut from a (3,T,H,W) source: frames [start, start+length)
/// after resizing to resized_h x resized_w, then the target window at (top, left).
struct ClipWindow {
  std::size_t start = 0;
  std::size_t resized_h = 0;
  std::size_t resized_w = 0;
  std::size_t top = 0;
  std::size_t left = 0;
};

/// Train mode draws start and crop offset uniformly from `seed`; eval mode
/// centres both. DataError when the source has fewer than `length` frames.
ClipWindow plan_window(std::size_t frames, std::size_t h, std::size_t w, std::size_t length, std::size_t target,
                       SampleMode mode, std::uint64_t seed);

/// Cuts a (3,length,target,target) clip from a (3,T,H,W) source.
Tensorf extract_clip(const Tensorf& source, const ClipWindow& window, std::size_t length, std::size_t target);

Tensorf sample_clip(const Tensorf& source, std::size_t length, std::size_t target, SampleMode mode,
                    std::uint64_t seed);
Tensorf sample_clip(const std::filesystem::path& clip_file, std::size_t length, std::size_t target, SampleMode mode,
                    std::uint64_t seed);

/// Evenly spaced start frames for `count` eval clips (the centre for count 1).
std::vector<std::size_t> eval_starts(std::size_t frames, std::size_t length, std::size_t count);

struct ChannelStats {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};
};

/// Per-channel mean and population std over (3,T,H,W) clips.
ChannelStats channel_stats(std::span<const Tensorf> clips);

/// (x - mean) / std per channel, in place on a (3,...) clip or an (N,3,T,H,W) batch.
/// NumericError for a non-positive std.
void normalize(Tensorf& clip, const ChannelStats& stats);
void denormalize(Tensorf& clip, const ChannelStats& stats);

/// Stateless 64-bit mixer used to derive per-sample seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace stfl
