#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace stfl {

using FeatureMatrix = std::vector<std::vector<double>>;

struct LogRegOptions {
  double lr = 0.05;
  double l2 = 1e-4;
  double tol = 1e-7;
  std::size_t max_iters = 10000;
  bool standardize = true;
};

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0.0;
  // Per-dimension standardization applied before the affine score; identity
  // when trained without standardization.
  std::vector<double> feature_means;
  std::vector<double> feature_stds;
  std::size_t iterations = 0;
  double final_loss = 0.0;

  /// A zero model of the given dimension with identity standardization.
  static LogRegModel zeros(std::size_t dim);
};

struct LogRegResult {
  LogRegModel model;
  std::vector<double> loss_trace;  // objective before each update, then the final value
};

/// Mean negative log-likelihood plus (l2 / 2) |w|^2 (bias unpenalized) and its
/// gradient, on features already standardized. Labels are 0/1.
double logreg_objective(std::span<const double> weights, double bias, const FeatureMatrix& x,
                        std::span<const int> labels, double l2, std::vector<double>* grad_w, double* grad_b);

/// Full-batch gradient descent; stops when the gradient norm drops below tol.
LogRegResult logreg_train(const FeatureMatrix& features, std::span<const int> labels,
                          const LogRegOptions& options = {});

/// Probability of class 1 ("fake").
double logreg_predict(const LogRegModel& model, std::span<const double> feature);

void save_logreg(const LogRegModel& model, const std::filesystem::path& path);
LogRegModel load_logreg(const std::filesystem::path& path);

struct KMeansResult {
  std::vector<std::size_t> assignments;
  FeatureMatrix centroids;
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // after each assignment step
  std::size_t iterations = 0;
};

/// Lloyd's algorithm from k-means++ seeding; an emptied cluster is re-seeded
/// at the point farthest from its current centroid.
KMeansResult kmeans(const FeatureMatrix& features, std::size_t k, std::uint64_t seed, std::size_t max_iters = 300);

/// Maps two clusters to labels 0/1. With labels, each cluster takes its
/// majority label; without, the cluster with higher mean energy over the last
/// third of the feature bins is "fake" (1).
std::vector<int> clusters_to_labels(const KMeansResult& result, const FeatureMatrix& features,
                                    std::optional<std::span<const int>> labels = std::nullopt);

struct SpectrumStats {
  std::vector<double> real_mean, real_std, fake_mean, fake_std;
};

/// Per-bin mean and sample standard deviation for each class (>= 2 samples each).
SpectrumStats spectrum_stats(const FeatureMatrix& features, std::span<const int> labels);
void write_stats_csv(const SpectrumStats& stats, const std::filesystem::path& path);

}  // namespace stfl
