#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stfl {

/// Area under the ROC curve of scores where label 1 is the positive (fake)
/// class. Tied scores form one curve segment, so the value equals
/// P(s_fake > s_real) + P(s_fake == s_real) / 2. DataError unless both
/// classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double threshold;  // predict fake when score >= threshold; +inf for the origin
  double fpr;
  double tpr;
};

/// One point per distinct score in descending order, preceded by (0,0).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);
/// Trapezoidal area under a curve from roc_curve.
double curve_area(std::span<const RocPoint> curve);
/// CSV `threshold,fpr,tpr` at full precision.
void write_roc_csv(std::span<const RocPoint> curve, const std::filesystem::path& path);
std::vector<RocPoint> read_roc_csv(const std::filesystem::path& path);

/// Fraction of scores on the correct side of the threshold (fake when >= it).
double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

/// Fixed 4-decimal text form used for every serialized metric.
std::string format_metric(double value);

struct EvalReport {
  std::string method;
  std::string split = "test";
  std::string aggregation = "video";
  double roc_auc = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
  std::string curve_file;
  std::optional<std::size_t> best_epoch;
};

/// Single JSON object; roc_auc and accuracy carry exactly four decimals.
std::string report_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path);

}  // namespace stfl
