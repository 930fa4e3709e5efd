#pragma once

// Synthetic two-class clip dataset. Real clips are drifting multi-scale
// gratings; fake clips use the same generator and then, inside a centred
// patch of half the frame size, replace the content with a 2x nearest-neighbour
// upsampling of its 2x2 block means and add per-frame independent noise and a
// brightness flicker scaled by the artifact strength. Strength 0 leaves fakes
// statistically identical to reals.

#include <cstdint>
#include <filesystem>

#include "stfl/data/manifest.hpp"
#include "stfl/tensor.hpp"

namespace stfl {

struct SynthConfig {
  std::size_t n_real = 100;
  std::size_t n_fake = 100;
  std::size_t frames = 16;
  std::size_t hw = 32;
  double artifact_strength = 0.5;
  /// Fraction of each class assigned to the test split.
  double test_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One (3, frames, hw, hw) clip; `index` selects an independent draw.
Tensorf synth_clip(const SynthConfig& config, int label, std::size_t index);

/// Writes clips/<label>_<index>.clpt and manifest.csv under out_dir and
/// returns the manifest. Files are byte-identical for a fixed config.
Manifest synth_dataset(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace stfl
