#pragma once

#include <vector>

#include "stfl/ops/gradcheck.hpp"

namespace stfl {

/// Finite-difference checks, in double precision, of every differentiable
/// building block: conv3d, batchnorm, linear+relu, average pooling, the
/// stacked LSTM, weighted cross-entropy, a factorized (2+1)D residual block
/// and a 3D residual block with projection shortcut.
std::vector<GradcheckReport> run_gradient_suite(const GradcheckOptions& options = {});

}  // namespace stfl
