#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "stfl/tensor.hpp"

namespace stfl {

inline constexpr std::size_t kFeatureLength = 300;

enum class AmplitudeMode {
  log,  // log(1 + |F|)
  raw,  // |F|
};

/// (3, H, W) RGB -> (H, W) luminance with weights (0.299, 0.587, 0.114).
template <class T>
Tensord to_grayscale(const Tensor<T>& rgb);

/// Unshifted 2D DFT of an (H, W) frame, row-major, F[k,l] = sum x[m,n] e^{-2 pi i (km/H + ln/W)}.
std::vector<std::complex<double>> dft2d(const Tensord& frame);

/// Centered (zero frequency at (H/2, W/2)) amplitude spectrum, log-compressed by default.
Tensord amplitude_spectrum(const Tensord& frame, AmplitudeMode mode = AmplitudeMode::log);

/// Bin r in [0, floor(min(H, W) / 2) - 1] holds the mean of the entries whose
/// Euclidean distance to (H/2, W/2), rounded to the nearest integer, is r.
std::vector<double> azimuthal_average(const Tensord& spectrum);

/// Linear interpolation onto `n` uniformly spaced points, keeping both endpoints.
std::vector<double> resample_linear(const std::vector<double>& profile, std::size_t n);

struct SpectrumFeature {
  std::vector<double> values;  // kFeatureLength entries, values[0] == 1
  std::string source;
};

/// amplitude_spectrum -> azimuthal_average -> resample to 300 -> divide by the
/// first (zero-frequency) bin. Throws DataError when that bin is zero.
SpectrumFeature spectrum_feature(const Tensord& frame, AmplitudeMode mode = AmplitudeMode::log,
                                 std::string source = {});

}  // namespace stfl
