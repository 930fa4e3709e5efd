#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace stfl {

struct GradcheckOptions {
  double step = 1e-5;
  // Coordinates compared per tensor; larger tensors are randomly subsampled.
  std::size_t max_coords = 200;
  std::uint64_t seed = 0;
};

/// One differentiable quantity: mutable values probed by central differences,
/// and the analytic gradient computed for them at the unperturbed point.
struct GradcheckTarget {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

struct GradcheckReport {
  std::string op;
  std::vector<GradcheckEntry> entries;

  double max_error() const;
  bool passed(double tolerance) const { return max_error() < tolerance; }
};

/// |a - n| / max(|a|, |n|, 1e-8)
double gradcheck_relative_error(double analytic, double numeric);

/// Compares each target's analytic gradient with (L(x+h) - L(x-h)) / 2h.
/// `loss` must be a deterministic function of the target values.
GradcheckReport gradcheck(const std::string& op, const std::function<double()>& loss,
                          std::span<const GradcheckTarget> targets, const GradcheckOptions& options = {});

}  // namespace stfl
