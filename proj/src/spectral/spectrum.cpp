#include "stfl/spectral/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace stfl {

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

void require_finite(const Tensord& frame) {
  if (!frame.all_finite()) throw DataError("spectrum: frame contains non-finite values");
}

}  // namespace

template <class T>
Tensord to_grayscale(const Tensor<T>& rgb) {
  require_rank(rgb, 3, "grayscale input");
  if (rgb.dim(0) != 3) throw DimensionError("grayscale: expected 3 channels, got " + shape_str(rgb.shape()));
  const std::size_t H = rgb.dim(1), W = rgb.dim(2), n = H * W;
  Tensord g({H, W});
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = 0.299 * static_cast<double>(rgb[i]) + 0.587 * static_cast<double>(rgb[n + i]) +
           0.114 * static_cast<double>(rgb[2 * n + i]);
  }
  return g;
}

template Tensord to_grayscale(const Tensor<float>&);
template Tensord to_grayscale(const Tensor<double>&);

std::vector<std::complex<double>> dft2d(const Tensord& frame) {
  require_rank(frame, 2, "dft2d frame");
  require_finite(frame);
  const int H = static_cast<int>(frame.dim(0)), W = static_cast<int>(frame.dim(1));
  std::vector<std::complex<double>> data(frame.data().begin(), frame.data().end());
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(plan_mutex());
    plan = fftw_plan_dft_2d(H, W, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
  return data;
}

Tensord amplitude_spectrum(const Tensord& frame, AmplitudeMode mode) {
  require_rank(frame, 2, "amplitude_spectrum frame");
  const std::size_t H = frame.dim(0), W = frame.dim(1);
  if (H < 4 || W < 4) throw DimensionError("amplitude_spectrum: frame must be at least 4x4, got " + shape_str(frame.shape()));
  const auto F = dft2d(frame);
  Tensord out({H, W});
  for (std::size_t k = 0; k < H; ++k) {
    for (std::size_t l = 0; l < W; ++l) {
      const double a = std::abs(F[k * W + l]);
      out.at((k + H / 2) % H, (l + W / 2) % W) = mode == AmplitudeMode::log ? std::log1p(a) : a;
    }
  }
  return out;
}

std::vector<double> azimuthal_average(const Tensord& spectrum) {
  require_rank(spectrum, 2, "azimuthal_average spectrum");
  const std::size_t H = spectrum.dim(0), W = spectrum.dim(1);
  if (std::min(H, W) < 2) throw DimensionError("azimuthal_average: spectrum too small " + shape_str(spectrum.shape()));
  const std::size_t r_max = std::min(H, W) / 2 - 1;
  std::vector<double> sum(r_max + 1, 0.0);
  std::vector<std::size_t> count(r_max + 1, 0);
  const double cy = static_cast<double>(H / 2), cx = static_cast<double>(W / 2);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const double r = std::round(std::hypot(static_cast<double>(y) - cy, static_cast<double>(x) - cx));
      const auto bin = static_cast<std::size_t>(r);
      if (bin > r_max) continue;
      sum[bin] += spectrum.at(y, x);
      ++count[bin];
    }
  }
  for (std::size_t r = 0; r <= r_max; ++r) sum[r] /= static_cast<double>(count[r]);
  return sum;
}

std::vector<double> resample_linear(const std::vector<double>& profile, std::size_t n) {
  if (profile.empty() || n == 0) throw DimensionError("resample_linear: empty profile or target");
  if (n == 1) return {profile.front()};
  std::vector<double> out(n);
  const double span = static_cast<double>(profile.size() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = span * static_cast<double>(i) / static_cast<double>(n - 1);
    const auto lo = std::min(static_cast<std::size_t>(pos), profile.size() - 1);
    const std::size_t hi = std::min(lo + 1, profile.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    out[i] = profile[lo] + (profile[hi] - profile[lo]) * frac;
  }
  out.back() = profile.back();
  return out;
}

SpectrumFeature spectrum_feature(const Tensord& frame, AmplitudeMode mode, std::string source) {
  require_rank(frame, 2, "spectrum_feature frame");
  if (frame.dim(0) < 8 || frame.dim(1) < 8) {
    throw DimensionError("spectrum_feature: frame must be at least 8x8, got " + shape_str(frame.shape()));
  }
  std::vector<double> v = resample_linear(azimuthal_average(amplitude_spectrum(frame, mode)), kFeatureLength);
  const double dc = v.front();
  if (!(dc > 0.0) || !std::isfinite(dc)) {
    throw DataError("spectrum_feature: degenerate frame (zero-frequency bin is " + std::to_string(dc) + ")" +
                    (source.empty() ? "" : " in " + source));
  }
  for (double& x : v) x /= dc;
  v.front() = 1.0;
  return {std::move(v), std::move(source)};
}

}  // namespace stfl
