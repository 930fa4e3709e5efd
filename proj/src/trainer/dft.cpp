#include "stfl/trainer/dft.hpp"

#include "stfl/data/clip_io.hpp"
#include "stfl/data/image.hpp"
#include "stfl/data/sample.hpp"
#include "stfl/error.hpp"
#include "stfl/parallel.hpp"

namespace stfl {

FrameFeatures dft_features(const Manifest& manifest, std::optional<Split> split, std::size_t frames_per_video,
                           AmplitudeMode mode) {
  if (frames_per_video == 0) throw ConfigError("dft: frames per video must be positive");
  std::vector<ClipRecord> records;
  for (const auto& r : manifest.records)
    if (!split || r.split == *split) records.push_back(r);
  if (records.empty()) throw DataError("dft: no records in the requested split");
  std::vector<std::vector<std::vector<double>>> per_video(records.size());
  parallel_for(records.size(), [&](std::size_t v) {
    const Tensorf clip = read_clip(manifest.resolve(records[v]));
    const std::size_t k = std::min(frames_per_video, clip.dim(1));
    for (std::size_t t : eval_starts(clip.dim(1), 1, k)) {
      const Tensord gray = to_grayscale(clip_frame(clip, t).cast<double>());
      per_video[v].push_back(spectrum_feature(gray, mode, records[v].path).values);
    }
  });
  FrameFeatures out;
  for (std::size_t v = 0; v < records.size(); ++v)
    for (auto& f : per_video[v]) {
      out.features.push_back(std::move(f));
      out.labels.push_back(records[v].label);
      out.video.push_back(v);
    }
  return out;
}

EvalResult dft_evaluate(const LogRegModel& model, const FrameFeatures& frames, Aggregation aggregation) {
  std::vector<double> scores;
  scores.reserve(frames.features.size());
  for (const auto& f : frames.features) scores.push_back(logreg_predict(model, f));
  return score_result(scores, frames.labels, aggregation, frames.video);
}

double cluster_agreement(std::span<const int> mapped, std::span<const int> labels) {
  if (mapped.size() != labels.size() || mapped.empty()) {
    throw DimensionError("cluster_agreement: need equally many assignments and labels");
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < mapped.size(); ++i) ok += mapped[i] == labels[i];
  return static_cast<double>(ok) / static_cast<double>(mapped.size());
}

}  // namespace stfl
