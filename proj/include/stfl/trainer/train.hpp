#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "stfl/models/arch.hpp"
#include "stfl/trainer/evaluate.hpp"

namespace stfl {

struct TrainConfig {
  ArchSpec arch;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double base_lr = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::size_t lr_step = 10;
  double lr_gamma = 0.1;
  std::uint64_t seed = 0;
  std::filesystem::path manifest;
  /// Receives best.ckpt, last.ckpt and history.csv.
  std::filesystem::path out_dir;
  EvalOptions eval;
  /// Per-epoch progress lines; nullptr for silence.
  std::ostream* log = nullptr;

  void validate() const;
};

/// base_lr * lr_gamma ^ floor(epoch / lr_step).
double lr_at_epoch(const TrainConfig& config, std::size_t epoch);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double test_auc = 0.0;
  double test_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_auc_epoch = 0;
  std::size_t best_acc_epoch = 0;
  std::filesystem::path checkpoint;       // best test ROC-AUC
  std::filesystem::path last_checkpoint;  // weights after the final epoch
  std::filesystem::path history_file;

  double best_auc() const { return history.at(best_auc_epoch).test_auc; }
  double best_acc() const { return history.at(best_acc_epoch).test_acc; }
};

/// Seeded SGD training with class-weighted cross-entropy; one clip per video
/// per epoch. The checkpoint with the highest test ROC-AUC is kept. A numeric
/// failure aborts the run with NumericError and leaves the last best
/// checkpoint in place.
TrainResult train(const TrainConfig& config);

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

}  // namespace stfl
