#include "stfl/trainer/evaluate.hpp"

#include <algorithm>
#include <map>

#include "stfl/data/clip_io.hpp"
#include "stfl/error.hpp"
#include "stfl/ops/loss.hpp"
#include "stfl/parallel.hpp"

namespace stfl {

std::string aggregation_name(Aggregation a) { return a == Aggregation::clip ? "clip" : "video"; }

Aggregation parse_aggregation(const std::string& name) {
  if (name == "clip") return Aggregation::clip;
  if (name == "video") return Aggregation::video;
  throw ConfigError("unknown aggregation '" + name + "' (expected clip or video)");
}

EvalResult score_result(std::span<const double> scores, std::span<const int> labels, Aggregation aggregation,
                        std::span<const std::size_t> groups) {
  if (scores.empty()) throw DataError("evaluate: nothing to score");
  if (scores.size() != labels.size() || (!groups.empty() && groups.size() != scores.size())) {
    throw DimensionError("evaluate: scores, labels and groups must have equal lengths");
  }
  EvalResult r;
  if (aggregation == Aggregation::video && !groups.empty()) {
    std::map<std::size_t, std::pair<double, std::size_t>> sums;
    std::map<std::size_t, int> label_of;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      auto& s = sums[groups[i]];
      s.first += scores[i];
      s.second += 1;
      const auto [it, fresh] = label_of.emplace(groups[i], labels[i]);
      if (!fresh && it->second != labels[i]) throw DataError("evaluate: video with mixed labels");
    }
    for (const auto& [g, s] : sums) {
      r.scores.push_back(s.first / static_cast<double>(s.second));
      r.labels.push_back(label_of[g]);
    }
  } else {
    r.scores.assign(scores.begin(), scores.end());
    r.labels.assign(labels.begin(), labels.end());
  }
  for (int l : r.labels) (l == kFake ? r.n_fake : r.n_real) += 1;
  r.curve = roc_curve(r.scores, r.labels);
  r.roc_auc = curve_area(r.curve);
  r.accuracy = accuracy(r.scores, r.labels);
  return r;
}

EvalResult evaluate(Network<float>& net, const ChannelStats& norm, const Manifest& manifest, Split split,
                    const EvalOptions& options) {
  const auto records = manifest.select(split);
  if (records.empty()) throw DataError("evaluate: " + split_name(split) + " split is empty");
  if (options.batch_size == 0 || options.clips_per_video == 0) {
    throw ConfigError("evaluate: batch size and clips per video must be positive");
  }
  const ClipShape& cs = net.spec().clip;
  if (cs.h != cs.w) throw ConfigError("evaluate: square clip crops are required, got " + clip_str(cs));

  struct Item {
    std::size_t video;
    std::size_t start;
  };
  // Start frames come from the manifest frame counts; clips are read per batch.
  std::vector<Item> items;
  for (std::size_t v = 0; v < records.size(); ++v) {
    for (std::size_t s : eval_starts(records[v].frames, cs.t, options.clips_per_video)) items.push_back({v, s});
  }

  const NormMode saved = net.mode();
  net.set_mode(NormMode::eval);
  std::vector<double> scores(items.size());
  std::vector<int> labels(items.size());
  std::vector<std::size_t> groups(items.size());
  const std::size_t per_clip = 3 * cs.t * cs.h * cs.w;
  for (std::size_t b0 = 0; b0 < items.size(); b0 += options.batch_size) {
    const std::size_t n = std::min(options.batch_size, items.size() - b0);
    Tensorf batch({n, 3, cs.t, cs.h, cs.w});
    parallel_for(n, [&](std::size_t i) {
      const Item& it = items[b0 + i];
      const Tensorf src = read_clip(manifest.resolve(records[it.video]));
      ClipWindow win = plan_window(src.dim(1), src.dim(2), src.dim(3), cs.t, cs.h, SampleMode::eval, 0);
      win.start = it.start;
      Tensorf clip = extract_clip(src, win, cs.t, cs.h);
      normalize(clip, norm);
      std::copy(clip.data().begin(), clip.data().end(), batch.data().begin() + static_cast<long>(i * per_clip));
    });
    const Tensorf probs = softmax(net.forward(batch));
    for (std::size_t i = 0; i < n; ++i) {
      scores[b0 + i] = static_cast<double>(probs.at(i, 1));
      labels[b0 + i] = records[items[b0 + i].video].label;
      groups[b0 + i] = items[b0 + i].video;
    }
  }
  net.set_mode(saved);
  return score_result(scores, labels, options.aggregation, groups);
}

EvalReport make_report(const std::string& method, Split split, Aggregation aggregation, const EvalResult& result,
                       const std::string& curve_file, std::optional<std::size_t> best_epoch) {
  EvalReport r;
  r.method = method;
  r.split = split_name(split);
  r.aggregation = aggregation_name(aggregation);
  r.roc_auc = result.roc_auc;
  r.accuracy = result.accuracy;
  r.n = result.scores.size();
  r.n_real = result.n_real;
  r.n_fake = result.n_fake;
  r.curve_file = curve_file;
  r.best_epoch = best_epoch;
  return r;
}

void save_trained(Network<float>& net, const ChannelStats& norm, std::size_t epoch,
                  const std::vector<NamedTensor>* optimizer, const std::filesystem::path& path) {
  Checkpoint ck = snapshot(net);
  Tensorf mean({3}), sd({3});
  for (std::size_t c = 0; c < 3; ++c) {
    mean[c] = static_cast<float>(norm.mean[c]);
    sd[c] = static_cast<float>(norm.std[c]);
  }
  ck.entries.push_back({"@norm/mean", mean});
  ck.entries.push_back({"@norm/std", sd});
  ck.entries.push_back({"@train/epoch", Tensorf({1}, static_cast<float>(epoch))});
  if (optimizer != nullptr) ck.optimizer = *optimizer;
  write_checkpoint(path, ck);
}

TrainedModel load_trained(const std::filesystem::path& path) {
  LoadedCheckpoint lc = checkpoint_load(path);
  TrainedModel m{std::move(lc.network), {}, std::nullopt};
  const NamedTensor* mean = lc.raw.find("@norm/mean");
  const NamedTensor* sd = lc.raw.find("@norm/std");
  if (mean != nullptr && sd != nullptr) {
    if (mean->value.numel() != 3 || sd->value.numel() != 3) {
      throw FormatError(path.string() + ": normalization entries must hold 3 values");
    }
    for (std::size_t c = 0; c < 3; ++c) {
      m.norm.mean[c] = mean->value[c];
      m.norm.std[c] = sd->value[c];
    }
  }
  if (const NamedTensor* e = lc.raw.find("@train/epoch"); e != nullptr && e->value.numel() == 1) {
    m.epoch = static_cast<std::size_t>(e->value[0]);
  }
  return m;
}

}  // namespace stfl
