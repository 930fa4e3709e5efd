#include "stfl/trainer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "stfl/error.hpp"

namespace stfl {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels, const char* who) {
  if (scores.size() != labels.size()) {
    throw DimensionError(std::string(who) + ": " + std::to_string(scores.size()) + " scores for " +
                         std::to_string(labels.size()) + " labels");
  }
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError(std::string(who) + ": labels must be 0 or 1");
    if (!std::isfinite(scores[i])) throw NumericError(std::string(who) + ": non-finite score at " + std::to_string(i));
    (labels[i] == 1 ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) throw DataError(std::string(who) + ": both classes must be present");
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (static_cast<unsigned char>(c) < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\u%04x", c);
      out += buf;
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels, "roc_curve");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double P = 0.0, N = 0.0;
  for (int l : labels) (l == 1 ? P : N) += 1.0;
  std::vector<RocPoint> curve{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] == 1 ? tp : fp) += 1;
    curve.push_back({s, static_cast<double>(fp) / N, static_cast<double>(tp) / P});
  }
  return curve;
}

double curve_area(std::span<const RocPoint> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) * 0.5;
  }
  return area;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  return curve_area(roc_curve(scores, labels));
}

void write_roc_csv(std::span<const RocPoint> curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write ROC curve " + path.string());
  out << "threshold,fpr,tpr\n";
  char buf[96];
  for (const auto& p : curve) {
    if (std::isinf(p.threshold)) {
      std::snprintf(buf, sizeof buf, "inf,%.17g,%.17g\n", p.fpr, p.tpr);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.fpr, p.tpr);
    }
    out << buf;
  }
  if (!out) throw IoError("failed writing ROC curve " + path.string());
}

std::vector<RocPoint> read_roc_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read ROC curve " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "threshold,fpr,tpr") throw FormatError(path.string() + ": bad ROC header");
  std::vector<RocPoint> curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RocPoint p{};
    std::istringstream row(line);
    std::string a, b, c;
    std::getline(row, a, ',');
    std::getline(row, b, ',');
    std::getline(row, c, ',');
    try {
      p.threshold = a == "inf" ? std::numeric_limits<double>::infinity() : std::stod(a);
      p.fpr = std::stod(b);
      p.tpr = std::stod(c);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": malformed ROC row '" + line + "'");
    }
    curve.push_back(p);
  }
  return curve;
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw DataError("accuracy: need equally many scores and labels, at least one");
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) ok += (scores[i] >= threshold) == (labels[i] == 1);
  return static_cast<double>(ok) / static_cast<double>(scores.size());
}

std::string format_metric(double value) {
  if (!std::isfinite(value)) throw NumericError("format_metric: non-finite value");
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  // Avoid "-0.0000" for tiny negative round-off.
  if (std::string(buf) == "-0.0000") return "0.0000";
  return buf;
}

std::string report_json(const EvalReport& r) {
  std::ostringstream s;
  s << "{\n"
    << "  \"method\": \"" << json_escape(r.method) << "\",\n"
    << "  \"split\": \"" << json_escape(r.split) << "\",\n"
    << "  \"aggregation\": \"" << json_escape(r.aggregation) << "\",\n"
    << "  \"roc_auc\": " << format_metric(r.roc_auc) << ",\n"
    << "  \"accuracy\": " << format_metric(r.accuracy) << ",\n"
    << "  \"n\": " << r.n << ",\n"
    << "  \"n_real\": " << r.n_real << ",\n"
    << "  \"n_fake\": " << r.n_fake << ",\n"
    << "  \"best_epoch\": " << (r.best_epoch ? std::to_string(*r.best_epoch) : "null") << ",\n"
    << "  \"curve_file\": \"" << json_escape(r.curve_file) << "\"\n"
    << "}\n";
  return s.str();
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report " + path.string());
  out << report_json(report);
  if (!out) throw IoError("failed writing report " + path.string());
}

}  // namespace stfl
