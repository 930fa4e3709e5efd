#include "stfl/spectral/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "stfl/error.hpp"

namespace stfl {

namespace {

void check_features(const FeatureMatrix& x, std::span<const int> labels, const char* what) {
  if (x.empty()) throw DataError(std::string(what) + ": no samples");
  if (x.size() != labels.size()) {
    throw DimensionError(std::string(what) + ": " + std::to_string(x.size()) + " samples but " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t d = x.front().size();
  for (const auto& row : x) {
    if (row.size() != d) throw DimensionError(std::string(what) + ": ragged feature matrix");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError(std::string(what) + ": label " + std::to_string(y) + " is not 0 or 1");
  }
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  char buf[40];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    if (i) out += ',';
    out += buf;
  }
  return out;
}

std::vector<double> split_numbers(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw FormatError("logreg model: bad number '" + tok + "' in " + key);
    }
  }
  return out;
}

}  // namespace

LogRegModel LogRegModel::zeros(std::size_t dim) {
  LogRegModel m;
  m.weights.assign(dim, 0.0);
  m.feature_means.assign(dim, 0.0);
  m.feature_stds.assign(dim, 1.0);
  return m;
}

double logreg_objective(std::span<const double> weights, double bias, const FeatureMatrix& x,
                        std::span<const int> labels, double l2, std::vector<double>* grad_w, double* grad_b) {
  const double n = static_cast<double>(x.size());
  double loss = 0.0;
  if (grad_w) grad_w->assign(weights.size(), 0.0);
  if (grad_b) *grad_b = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = dot(weights, x[i]) + bias;
    // -[y log s(z) + (1 - y) log(1 - s(z))] = softplus(z) - y z
    loss += softplus(z) - labels[i] * z;
    const double r = (sigmoid(z) - labels[i]) / n;
    if (grad_w) {
      for (std::size_t j = 0; j < weights.size(); ++j) (*grad_w)[j] += r * x[i][j];
    }
    if (grad_b) *grad_b += r;
  }
  loss /= n;
  loss += 0.5 * l2 * dot(weights, weights);
  if (grad_w) {
    for (std::size_t j = 0; j < weights.size(); ++j) (*grad_w)[j] += l2 * weights[j];
  }
  return loss;
}

LogRegResult logreg_train(const FeatureMatrix& features, std::span<const int> labels, const LogRegOptions& options) {
  check_features(features, labels, "logreg_train");
  const std::size_t has_fake = std::count(labels.begin(), labels.end(), 1);
  if (has_fake == 0 || has_fake == labels.size()) throw DataError("logreg_train: both classes are required");
  if (!(options.lr > 0.0) || options.l2 < 0.0) throw ConfigError("logreg_train: lr must be positive, l2 >= 0");

  const std::size_t d = features.front().size(), n = features.size();
  LogRegResult result;
  LogRegModel& m = result.model;
  m = LogRegModel::zeros(d);
  if (options.standardize) {
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (const auto& row : features) mean += row[j];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (const auto& row : features) var += (row[j] - mean) * (row[j] - mean);
      const double sd = std::sqrt(var / static_cast<double>(n));
      m.feature_means[j] = mean;
      m.feature_stds[j] = sd > 0.0 ? sd : 1.0;
    }
  }
  FeatureMatrix x(features);
  for (auto& row : x)
    for (std::size_t j = 0; j < d; ++j) row[j] = (row[j] - m.feature_means[j]) / m.feature_stds[j];

  std::vector<double> gw;
  double gb = 0.0;
  std::size_t it = 0;
  double loss = 0.0;
  for (;; ++it) {
    loss = logreg_objective(m.weights, m.bias, x, labels, options.l2, &gw, &gb);
    result.loss_trace.push_back(loss);
    if (!std::isfinite(loss)) throw NumericError("logreg_train: objective became non-finite");
    const double gnorm = std::sqrt(dot(gw, gw) + gb * gb);
    if (gnorm < options.tol || it >= options.max_iters) break;
    for (std::size_t j = 0; j < d; ++j) m.weights[j] -= options.lr * gw[j];
    m.bias -= options.lr * gb;
  }
  m.iterations = it;
  m.final_loss = loss;
  return result;
}

double logreg_predict(const LogRegModel& model, std::span<const double> feature) {
  if (feature.size() != model.weights.size()) {
    throw DimensionError("logreg_predict: feature length " + std::to_string(feature.size()) + " != model dimension " +
                         std::to_string(model.weights.size()));
  }
  double z = model.bias;
  for (std::size_t j = 0; j < feature.size(); ++j) {
    z += model.weights[j] * (feature[j] - model.feature_means[j]) / model.feature_stds[j];
  }
  return sigmoid(z);
}

void save_logreg(const LogRegModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  char buf[64];
  out << "version=1\n";
  out << "weights=" << join(model.weights) << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", model.bias);
  out << "bias=" << buf << "\n";
  out << "feature_means=" << join(model.feature_means) << "\n";
  out << "feature_stds=" << join(model.feature_stds) << "\n";
  out << "iterations=" << model.iterations << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", model.final_loss);
  out << "final_loss=" << buf << "\n";
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

LogRegModel load_logreg(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open logreg model '" + path.string() + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("logreg model: line " + std::to_string(lineno) + " has no '='");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  for (const char* key : {"version", "weights", "bias", "feature_means", "feature_stds"}) {
    if (!kv.count(key)) throw FormatError(std::string("logreg model: missing key '") + key + "'");
  }
  if (kv["version"] != "1") throw FormatError("logreg model: unsupported version " + kv["version"]);
  LogRegModel m;
  m.weights = split_numbers(kv["weights"], "weights");
  m.bias = split_numbers(kv["bias"], "bias").at(0);
  m.feature_means = split_numbers(kv["feature_means"], "feature_means");
  m.feature_stds = split_numbers(kv["feature_stds"], "feature_stds");
  if (m.feature_means.size() != m.weights.size() || m.feature_stds.size() != m.weights.size()) {
    throw FormatError("logreg model: weights, feature_means and feature_stds lengths differ");
  }
  if (kv.count("iterations")) m.iterations = std::stoul(kv["iterations"]);
  if (kv.count("final_loss")) m.final_loss = split_numbers(kv["final_loss"], "final_loss").at(0);
  return m;
}

KMeansResult kmeans(const FeatureMatrix& features, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
  if (features.empty()) throw DataError("kmeans: no samples");
  if (k == 0 || k > features.size()) {
    throw DataError("kmeans: k=" + std::to_string(k) + " must be in [1, " + std::to_string(features.size()) + "]");
  }
  const std::size_t n = features.size(), d = features.front().size();
  for (const auto& row : features) {
    if (row.size() != d) throw DimensionError("kmeans: ragged feature matrix");
  }
  std::mt19937_64 rng(seed);
  KMeansResult r;
  // k-means++ seeding.
  r.centroids.push_back(features[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (r.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(features[i], r.centroids.back()));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < n; ++pick) {
        u -= nearest[pick];
        if (u < 0.0) break;
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    r.centroids.push_back(features[pick]);
  }

  r.assignments.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  for (std::size_t it = 0; it < max_iters; ++it) {
    bool changed = it == 0;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = squared_distance(features[i], r.centroids[c]);
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      if (best != r.assignments[i]) changed = true;
      r.assignments[i] = best;
      dist[i] = best_d;
      inertia += best_d;
    }
    r.inertia_trace.push_back(inertia);
    r.inertia = inertia;
    r.iterations = it + 1;
    if (!changed) break;

    FeatureMatrix sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[r.assignments[i]];
      for (std::size_t j = 0; j < d; ++j) sums[r.assignments[i]][j] += features[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        const std::size_t far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        r.centroids[c] = features[far];
        dist[far] = 0.0;
        continue;
      }
      for (std::size_t j = 0; j < d; ++j) r.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
  }
  return r;
}

std::vector<int> clusters_to_labels(const KMeansResult& result, const FeatureMatrix& features,
                                    std::optional<std::span<const int>> labels) {
  if (result.centroids.size() != 2) throw DataError("clusters_to_labels: exactly two clusters are required");
  int fake_cluster = 1;
  if (labels) {
    if (labels->size() != result.assignments.size()) throw DimensionError("clusters_to_labels: label count mismatch");
    // Votes of cluster 1 for "fake"; cluster 0 takes the opposite label when
    // cluster 1 wins, which maximizes agreement for two clusters.
    long agree = 0;
    for (std::size_t i = 0; i < labels->size(); ++i) {
      agree += (static_cast<int>(result.assignments[i]) == (*labels)[i]) ? 1 : -1;
    }
    fake_cluster = agree >= 0 ? 1 : 0;
  } else {
    const std::size_t d = features.front().size(), from = d - d / 3;
    double energy[2] = {0.0, 0.0};
    std::size_t count[2] = {0, 0};
    for (std::size_t i = 0; i < features.size(); ++i) {
      const std::size_t c = result.assignments[i];
      for (std::size_t j = from; j < d; ++j) energy[c] += features[i][j];
      ++count[c];
    }
    for (int c = 0; c < 2; ++c) energy[c] = count[c] ? energy[c] / static_cast<double>(count[c]) : 0.0;
    fake_cluster = energy[1] >= energy[0] ? 1 : 0;
  }
  std::vector<int> out(result.assignments.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<int>(result.assignments[i]) == fake_cluster ? 1 : 0;
  }
  return out;
}

SpectrumStats spectrum_stats(const FeatureMatrix& features, std::span<const int> labels) {
  check_features(features, labels, "spectrum_stats");
  const std::size_t d = features.front().size();
  SpectrumStats s;
  for (int cls = 0; cls < 2; ++cls) {
    std::size_t n = 0;
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (labels[i] != cls) continue;
      ++n;
      for (std::size_t j = 0; j < d; ++j) mean[j] += features[i][j];
    }
    if (n < 2) {
      throw DataError(std::string("spectrum_stats: need at least 2 ") + (cls ? "fake" : "real") + " samples, got " +
                      std::to_string(n));
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (labels[i] != cls) continue;
      for (std::size_t j = 0; j < d; ++j) var[j] += (features[i][j] - mean[j]) * (features[i][j] - mean[j]);
    }
    for (double& v : var) v = std::sqrt(v / static_cast<double>(n - 1));
    (cls ? s.fake_mean : s.real_mean) = std::move(mean);
    (cls ? s.fake_std : s.real_std) = std::move(var);
  }
  return s;
}

void write_stats_csv(const SpectrumStats& stats, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "bin,real_mean,real_std,fake_mean,fake_std\n";
  char buf[160];
  for (std::size_t j = 0; j < stats.real_mean.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g\n", j, stats.real_mean[j], stats.real_std[j],
                  stats.fake_mean[j], stats.fake_std[j]);
    out << buf;
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace stfl
