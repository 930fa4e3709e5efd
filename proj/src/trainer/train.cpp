#include "stfl/trainer/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "stfl/data/clip_io.hpp"
#include "stfl/error.hpp"
#include "stfl/ops/loss.hpp"
#include "stfl/parallel.hpp"
#include "stfl/trainer/optim.hpp"

namespace stfl {

void TrainConfig::validate() const {
  arch.validate();
  if (epochs == 0) throw ConfigError("train: epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("train: batch size must be >= 1");
  if (!(base_lr > 0.0) || !(lr_gamma > 0.0) || lr_step == 0) {
    throw ConfigError("train: learning rate, gamma and step must be positive");
  }
  if (!(momentum >= 0.0) || !(weight_decay >= 0.0)) throw ConfigError("train: momentum and weight decay must be >= 0");
  if (arch.clip.h != arch.clip.w) throw ConfigError("train: square clip crops are required");
}

double lr_at_epoch(const TrainConfig& config, std::size_t epoch) {
  return config.base_lr * std::pow(config.lr_gamma, static_cast<double>(epoch / config.lr_step));
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write history " + path.string());
  out << "epoch,lr,train_loss,test_auc,test_acc\n";
  char lr[32];
  for (const auto& h : history) {
    std::snprintf(lr, sizeof lr, "%.10g", h.lr);
    out << h.epoch << ',' << lr << ',' << format_metric(h.train_loss) << ',' << format_metric(h.test_auc) << ','
        << format_metric(h.test_acc) << '\n';
  }
  if (!out) throw IoError("failed writing history " + path.string());
}

namespace {

// Running per-channel moments over every training clip file.
ChannelStats train_statistics(const Manifest& manifest, const std::vector<ClipRecord>& records) {
  std::array<double, 3> sum{}, sq{};
  double count = 0.0;
  for (const auto& r : records) {
    const Tensorf clip = read_clip(manifest.resolve(r));
    const std::size_t per = clip.numel() / 3;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < per; ++i) {
        const double v = clip[c * per + i];
        sum[c] += v;
        sq[c] += v * v;
      }
    count += static_cast<double>(per);
  }
  ChannelStats s;
  for (std::size_t c = 0; c < 3; ++c) {
    s.mean[c] = sum[c] / count;
    s.std[c] = std::sqrt(std::max(0.0, sq[c] / count - s.mean[c] * s.mean[c]));
    if (!(s.std[c] > 1e-8)) s.std[c] = 1.0;
  }
  return s;
}

std::vector<NamedTensor> optimizer_state(const Sgd<float>& sgd, std::vector<Tensorf>& velocity) {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < velocity.size(); ++i) out.push_back({sgd.params()[i]->name, velocity[i]});
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& config) {
  config.validate();
  const Manifest manifest = load_manifest(config.manifest);
  const ClipShape& cs = config.arch.clip;

  std::vector<ClipRecord> train_set;
  for (const auto& r : manifest.select(Split::train)) {
    if (r.frames < cs.t) {
      if (config.log != nullptr) {
        *config.log << "warning: skipping " << r.path << " (" << r.frames << " frames < clip length " << cs.t
                    << ")\n";
      }
      continue;
    }
    train_set.push_back(r);
  }
  std::array<std::size_t, 2> counts{0, 0};
  for (const auto& r : train_set) ++counts[static_cast<std::size_t>(r.label)];
  const std::array<double, 2> weights = class_weights(counts);
  if (manifest.select(Split::test).empty()) throw DataError("train: test split is empty");

  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) throw IoError("cannot create " + config.out_dir.string() + ": " + ec.message());

  const ChannelStats norm = train_statistics(manifest, train_set);
  Network<float> net = build<float>(config.arch, config.seed);
  Sgd<float> sgd(net.trainable_parameters());

  TrainResult result;
  result.checkpoint = config.out_dir / "best.ckpt";
  result.last_checkpoint = config.out_dir / "last.ckpt";
  result.history_file = config.out_dir / "history.csv";
  const std::size_t per_clip = 3 * cs.t * cs.h * cs.w;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const std::uint64_t epoch_seed = mix_seed(config.seed, epoch);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(epoch_seed);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    SgdOptions opt{lr_at_epoch(config, epoch), config.momentum, config.weight_decay};
    net.set_mode(NormMode::train);
    double loss_sum = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - b0);
      Tensorf batch({n, 3, cs.t, cs.h, cs.w});
      std::vector<int> labels(n);
      parallel_for(n, [&](std::size_t i) {
        const std::size_t idx = order[b0 + i];
        Tensorf clip = sample_clip(manifest.resolve(train_set[idx]), cs.t, cs.h, SampleMode::train,
                                   mix_seed(epoch_seed, idx));
        normalize(clip, norm);
        std::copy(clip.data().begin(), clip.data().end(), batch.data().begin() + static_cast<long>(i * per_clip));
        labels[i] = train_set[idx].label;
      });
      net.zero_grad();
      const auto loss = weighted_softmax_cross_entropy(net.forward(batch), labels, weights);
      if (!std::isfinite(loss.loss)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b0 / config.batch_size) + "; best checkpoint left at " +
                           result.checkpoint.string());
      }
      net.backward(loss.grad_logits);
      try {
        sgd.step(opt);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                           "; best checkpoint left at " + result.checkpoint.string());
      }
      loss_sum += loss.loss * static_cast<double>(n);
    }

    const EvalResult ev = evaluate(net, norm, manifest, Split::test, config.eval);
    EpochRecord rec{epoch, opt.lr, loss_sum / static_cast<double>(order.size()), ev.roc_auc, ev.accuracy};
    result.history.push_back(rec);
    if (epoch == 0 || rec.test_auc > result.history[result.best_auc_epoch].test_auc) {
      result.best_auc_epoch = epoch;
      const auto state = optimizer_state(sgd, sgd.velocity());
      save_trained(net, norm, epoch, &state, result.checkpoint);
    }
    if (epoch == 0 || rec.test_acc > result.history[result.best_acc_epoch].test_acc) result.best_acc_epoch = epoch;
    save_trained(net, norm, epoch, nullptr, result.last_checkpoint);
    write_history_csv(result.history, result.history_file);
    if (config.log != nullptr) {
      char line[160];
      std::snprintf(line, sizeof line, "epoch %zu lr %.3g loss %s auc %s acc %s\n", epoch, rec.lr,
                    format_metric(rec.train_loss).c_str(), format_metric(rec.test_auc).c_str(),
                    format_metric(rec.test_acc).c_str());
      *config.log << line << std::flush;
    }
  }
  return result;
}

}  // namespace stfl
