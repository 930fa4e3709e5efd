#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stfl/data/manifest.hpp"
#include "stfl/data/sample.hpp"
#include "stfl/models/checkpoint.hpp"
#include "stfl/models/network.hpp"
#include "stfl/trainer/metrics.hpp"

namespace stfl {

enum class Aggregation { clip, video };

std::string aggregation_name(Aggregation a);
/// ConfigError for anything but "clip" or "video".
Aggregation parse_aggregation(const std::string& name);

struct EvalResult {
  std::vector<double> scores;  // fake probability per clip or per video
  std::vector<int> labels;
  double roc_auc = 0.0;
  double accuracy = 0.0;
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
  std::vector<RocPoint> curve;
};

/// Metrics over already-computed scores. `groups`, when given, assigns each
/// score to a video; video aggregation then scores a video by the mean of its
/// members.
EvalResult score_result(std::span<const double> scores, std::span<const int> labels, Aggregation aggregation,
                        std::span<const std::size_t> groups = {});

struct EvalOptions {
  Aggregation aggregation = Aggregation::video;
  std::size_t clips_per_video = 1;
  std::size_t batch_size = 8;
};

/// Centre-cropped clips at evenly spaced starts, softmax fake probability per
/// clip. Runs the network in eval mode. DataError for an empty split.
EvalResult evaluate(Network<float>& net, const ChannelStats& norm, const Manifest& manifest, Split split,
                    const EvalOptions& options = {});

EvalReport make_report(const std::string& method, Split split, Aggregation aggregation, const EvalResult& result,
                       const std::string& curve_file, std::optional<std::size_t> best_epoch = std::nullopt);

/// A network checkpoint written by train(): weights, normalization statistics
/// and the epoch it was taken at.
struct TrainedModel {
  Network<float> network;
  ChannelStats norm;
  std::optional<std::size_t> epoch;
};

void save_trained(Network<float>& net, const ChannelStats& norm, std::size_t epoch,
                  const std::vector<NamedTensor>* optimizer, const std::filesystem::path& path);
TrainedModel load_trained(const std::filesystem::path& path);

}  // namespace stfl
