#pragma once

// Frame-level DFT detector over a clip manifest: evenly spaced frames of each
// clip are turned into spectrum features and classified or clustered.

#include <optional>
#include <vector>

#include "stfl/data/manifest.hpp"
#include "stfl/spectral/classify.hpp"
#include "stfl/spectral/spectrum.hpp"
#include "stfl/trainer/evaluate.hpp"

namespace stfl {

struct FrameFeatures {
  FeatureMatrix features;
  std::vector<int> labels;
  std::vector<std::size_t> video;  // index of the source record
};

/// Features for `frames_per_video` evenly spaced frames of every record in
/// `split` (all records when unset).
FrameFeatures dft_features(const Manifest& manifest, std::optional<Split> split, std::size_t frames_per_video,
                           AmplitudeMode mode = AmplitudeMode::log);

EvalResult dft_evaluate(const LogRegModel& model, const FrameFeatures& frames, Aggregation aggregation);

/// Fraction of points whose mapped cluster equals the label.
double cluster_agreement(std::span<const int> mapped, std::span<const int> labels);

}  // namespace stfl
