#include "stfl/ops/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "stfl/error.hpp"

namespace stfl {

double GradcheckReport::max_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

double gradcheck_relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport gradcheck(const std::string& op, const std::function<double()>& loss,
                          std::span<const GradcheckTarget> targets, const GradcheckOptions& options) {
  GradcheckReport report{op, {}};
  std::mt19937_64 rng(options.seed);
  const auto evaluate = [&] {
    const double v = loss();
    if (!std::isfinite(v)) throw NumericError("gradcheck: non-finite loss in " + op);
    return v;
  };
  for (const GradcheckTarget& target : targets) {
    if (target.values.size() != target.analytic.size()) {
      throw DimensionError("gradcheck: analytic gradient size mismatch for " + target.name + " in " + op);
    }
    std::vector<std::size_t> coords(target.values.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords);
      std::sort(coords.begin(), coords.end());
    }
    GradcheckEntry entry{target.name, 0.0, coords.size()};
    for (std::size_t i : coords) {
      const double analytic = target.analytic[i];
      if (!std::isfinite(analytic)) throw NumericError("gradcheck: non-finite analytic gradient in " + op);
      const double original = target.values[i];
      target.values[i] = original + options.step;
      const double up = evaluate();
      target.values[i] = original - options.step;
      const double down = evaluate();
      target.values[i] = original;
      const double numeric = (up - down) / (2.0 * options.step);
      entry.max_rel_error = std::max(entry.max_rel_error, gradcheck_relative_error(analytic, numeric));
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace stfl
