#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <regex>

#include "stfl/error.hpp"
#include "stfl/trainer/evaluate.hpp"
#include "stfl/trainer/metrics.hpp"

using namespace stfl;

namespace {

// P(s_fake > s_real) + P(equal) / 2 by enumerating every pair.
double pair_counting_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / pairs;
}

struct Sample {
  std::vector<double> scores;
  std::vector<int> labels;
};

Sample seeded(std::uint64_t seed, bool ties) {
  std::mt19937_64 rng(seed);
  const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 200)(rng);
  Sample s;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i < 1 ? 0 : (i < 2 ? 1 : static_cast<int>(rng() % 2));
    double v = u(rng) + 0.3 * label;
    if (ties) v = std::round(v * 10.0) / 10.0;
    s.scores.push_back(v);
    s.labels.push_back(label);
  }
  return s;
}

}  // namespace

TEST(RocAuc, PerfectTiedAndHandExample) {
  EXPECT_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}), 1.0);
  EXPECT_EQ(roc_auc(std::vector<double>(6, 0.3), std::vector<int>{0, 1, 0, 1, 1, 0}), 0.5);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.9, 0.4, 0.5, 0.1}, std::vector<int>{1, 1, 0, 0}), 0.75);
}

TEST(RocAuc, MatchesPairCountingOracle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Sample s = seeded(seed, seed % 3 == 0);
    EXPECT_NEAR(roc_auc(s.scores, s.labels), pair_counting_auc(s.scores, s.labels), 1e-12) << seed;
  }
}

TEST(RocAuc, NegatedScoresComplement) {
  for (std::uint64_t seed = 200; seed < 220; ++seed) {
    Sample s = seeded(seed, false);
    std::vector<double> neg;
    for (double v : s.scores) neg.push_back(-v);
    EXPECT_NEAR(roc_auc(s.scores, s.labels) + roc_auc(neg, s.labels), 1.0, 1e-12);
  }
}

TEST(RocAuc, InvariantUnderIncreasingTransforms) {
  const Sample s = seeded(300, false);
  std::vector<double> ex, af;
  for (double v : s.scores) {
    ex.push_back(std::exp(v));
    af.push_back(3.0 * v - 7.0);
  }
  const double base = roc_auc(s.scores, s.labels);
  EXPECT_NEAR(roc_auc(ex, s.labels), base, 1e-12);
  EXPECT_NEAR(roc_auc(af, s.labels), base, 1e-12);
}

TEST(RocAuc, SingleClassIsDataError) {
  EXPECT_THROW((void)roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), DataError);
  EXPECT_THROW((void)roc_curve(std::vector<double>{0.1}, std::vector<int>{0}), DataError);
}

TEST(RocCurve, EndpointsMonotoneAndArea) {
  for (std::uint64_t seed = 400; seed < 430; ++seed) {
    const Sample s = seeded(seed, seed % 2 == 0);
    const auto c = roc_curve(s.scores, s.labels);
    EXPECT_EQ(c.front().fpr, 0.0);
    EXPECT_EQ(c.front().tpr, 0.0);
    EXPECT_EQ(c.back().fpr, 1.0);
    EXPECT_EQ(c.back().tpr, 1.0);
    for (std::size_t i = 1; i < c.size(); ++i) {
      EXPECT_GE(c[i].fpr, c[i - 1].fpr);
      EXPECT_GE(c[i].tpr, c[i - 1].tpr);
      EXPECT_LT(c[i].threshold, c[i - 1].threshold);
    }
    EXPECT_NEAR(curve_area(c), pair_counting_auc(s.scores, s.labels), 1e-12);
  }
}

TEST(RocCurve, PerfectScoresPassThroughTopLeft) {
  const auto c = roc_curve(std::vector<double>{0.1, 0.3, 0.7, 0.8}, std::vector<int>{0, 0, 1, 1});
  bool corner = false;
  for (const auto& p : c) corner |= p.fpr == 0.0 && p.tpr == 1.0;
  EXPECT_TRUE(corner);
}

TEST(RocCurve, MatchesCumulativeCountOracle) {
  for (std::uint64_t seed = 500; seed < 520; ++seed) {
    const Sample s = seeded(seed, seed % 2 == 1);
    const auto c = roc_curve(s.scores, s.labels);
    double P = 0, N = 0;
    for (int l : s.labels) (l ? P : N) += 1;
    for (std::size_t i = 1; i < c.size(); ++i) {
      double tp = 0, fp = 0;
      for (std::size_t k = 0; k < s.scores.size(); ++k)
        if (s.scores[k] >= c[i].threshold) (s.labels[k] ? tp : fp) += 1;
      EXPECT_EQ(c[i].tpr, tp / P);
      EXPECT_EQ(c[i].fpr, fp / N);
    }
    std::vector<double> distinct(s.scores);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    EXPECT_EQ(c.size(), distinct.size() + 1);
  }
}

TEST(RocCurve, CsvRoundTripKeepsArea) {
  const Sample s = seeded(600, false);
  const auto c = roc_curve(s.scores, s.labels);
  const auto path = std::filesystem::temp_directory_path() / "stfl_roc_test.csv";
  write_roc_csv(c, path);
  const auto back = read_roc_csv(path);
  ASSERT_EQ(back.size(), c.size());
  EXPECT_TRUE(std::isinf(back[0].threshold));
  EXPECT_EQ(curve_area(back), curve_area(c));
}

TEST(Accuracy, ThresholdHalf) {
  EXPECT_EQ(accuracy(std::vector<double>{0.5, 0.49, 0.9, 0.1}, std::vector<int>{1, 0, 0, 0}), 0.75);
}

TEST(Report, FourDecimalRounding) {
  EXPECT_EQ(format_metric(0.997345), "0.9973");
  EXPECT_EQ(format_metric(1.0), "1.0000");
  EXPECT_EQ(format_metric(0.5), "0.5000");
  EXPECT_EQ(format_metric(-1e-9), "0.0000");
}

TEST(Report, JsonCarriesExactlyFourDecimals) {
  const EvalResult r = score_result(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1},
                                    Aggregation::clip);
  const std::string json = report_json(make_report("r3d", Split::test, Aggregation::clip, r, "roc.csv", 4));
  EXPECT_NE(json.find("\"roc_auc\": 1.0000,"), std::string::npos) << json;
  EXPECT_NE(json.find("\"accuracy\": 1.0000,"), std::string::npos) << json;
  EXPECT_NE(json.find("\"n\": 4,"), std::string::npos);
  EXPECT_NE(json.find("\"best_epoch\": 4,"), std::string::npos);
  EXPECT_NE(json.find("\"curve_file\": \"roc.csv\""), std::string::npos);
  const std::regex real_number(R"(:\s*-?\d+\.(\d+))");
  for (auto it = std::sregex_iterator(json.begin(), json.end(), real_number); it != std::sregex_iterator(); ++it) {
    EXPECT_EQ((*it)[1].length(), 4);
  }
}

TEST(Aggregate, VideoMeanOfClips) {
  const EvalResult r = score_result(std::vector<double>{0.2, 0.4, 0.9}, std::vector<int>{0, 0, 1},
                                    Aggregation::video, std::vector<std::size_t>{0, 0, 1});
  ASSERT_EQ(r.scores.size(), 2u);
  EXPECT_DOUBLE_EQ(r.scores[0], 0.3);
  EXPECT_EQ(r.n_real, 1u);
  EXPECT_EQ(r.n_fake, 1u);
  const EvalResult c = score_result(std::vector<double>{0.2, 0.4, 0.9}, std::vector<int>{0, 0, 1},
                                    Aggregation::clip, std::vector<std::size_t>{0, 0, 1});
  EXPECT_EQ(c.scores.size(), 3u);
  EXPECT_THROW((void)score_result(std::vector<double>{0.2, 0.4}, std::vector<int>{0, 1}, Aggregation::video,
                                  std::vector<std::size_t>{0, 0}),
               DataError);
  EXPECT_THROW((void)parse_aggregation("frame"), ConfigError);
}
