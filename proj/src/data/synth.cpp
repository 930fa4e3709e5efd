#include "stfl/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>

#include "stfl/data/clip_io.hpp"
#include "stfl/data/sample.hpp"
#include "stfl/error.hpp"
#include "stfl/parallel.hpp"

namespace stfl {

namespace {

constexpr std::size_t kGratings = 10;

struct Grating {
  double fy, fx, phase, speed, amp;
  std::array<double, 3> color;
};

Tensorf real_texture(const SynthConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<Grating> g(kGratings);
  double norm = 0.0;
  for (auto& k : g) {
    // Spatial frequency in cycles per pixel, log-uniform over [1/hw, 1/4].
    const double lo = std::log(1.0 / static_cast<double>(cfg.hw)), hi = std::log(0.25);
    const double f = std::exp(lo + (hi - lo) * u(rng));
    const double theta = two_pi * u(rng);
    k.fy = f * std::sin(theta);
    k.fx = f * std::cos(theta);
    k.phase = two_pi * u(rng);
    k.speed = (u(rng) - 0.5) * 0.6;
    k.amp = 1.0 / (f * static_cast<double>(cfg.hw));
    for (double& c : k.color) c = 0.7 + 0.6 * u(rng);
    norm += k.amp;
  }
  // Whole-texture drift in pixels per frame.
  const double vy = (u(rng) - 0.5) * 1.5, vx = (u(rng) - 0.5) * 1.5;
  const double base = 0.35 + 0.3 * u(rng);
  const std::size_t T = cfg.frames, S = cfg.hw;
  Tensorf clip({3, T, S, S});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t y = 0; y < S; ++y)
      for (std::size_t x = 0; x < S; ++x) {
        std::array<double, 3> v{0.0, 0.0, 0.0};
        const double py = static_cast<double>(y) + vy * static_cast<double>(t);
        const double px = static_cast<double>(x) + vx * static_cast<double>(t);
        for (const auto& k : g) {
          const double s = k.amp * std::sin(two_pi * (k.fy * py + k.fx * px) + k.phase + k.speed * t);
          for (std::size_t c = 0; c < 3; ++c) v[c] += k.color[c] * s;
        }
        for (std::size_t c = 0; c < 3; ++c) {
          clip.at(c, t, y, x) = static_cast<float>(std::clamp(base + 0.3 * v[c] / norm, 0.0, 1.0));
        }
      }
  return clip;
}

void inject_artifacts(Tensorf& clip, double strength, std::mt19937_64& rng) {
  const std::size_t T = clip.dim(1), S = clip.dim(2);
  const std::size_t P = std::max<std::size_t>(2, (S / 2) & ~std::size_t{1});
  const std::size_t off = (S - P) / 2;
  std::normal_distribution<double> noise(0.0, 0.16 * strength);
  std::uniform_real_distribution<double> flicker(-0.1 * strength, 0.1 * strength);
  for (std::size_t t = 0; t < T; ++t) {
    const double bright = flicker(rng);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t by = 0; by < P; by += 2)
        for (std::size_t bx = 0; bx < P; bx += 2) {
          const std::size_t y0 = off + by, x0 = off + bx;
          const double mean = 0.25 * (clip.at(c, t, y0, x0) + clip.at(c, t, y0, x0 + 1) +
                                      clip.at(c, t, y0 + 1, x0) + clip.at(c, t, y0 + 1, x0 + 1));
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const double v = mean + bright + noise(rng);
              clip.at(c, t, y0 + dy, x0 + dx) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (n_real == 0 || n_fake == 0) throw ConfigError("synth: n_real and n_fake must be positive");
  if (frames == 0 || hw < 4) throw ConfigError("synth: frames must be positive and hw at least 4");
  if (!(artifact_strength >= 0.0) || !std::isfinite(artifact_strength)) {
    throw ConfigError("synth: artifact_strength must be a finite value >= 0");
  }
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ConfigError("synth: test_fraction must lie in [0, 1)");
}

Tensorf synth_clip(const SynthConfig& config, int label, std::size_t index) {
  std::mt19937_64 rng(mix_seed(mix_seed(config.seed, static_cast<std::uint64_t>(label)), index));
  Tensorf clip = real_texture(config, rng);
  if (label == kFake && config.artifact_strength > 0.0) inject_artifacts(clip, config.artifact_strength, rng);
  return clip;
}

Manifest synth_dataset(const SynthConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "clips", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "clips").string() + ": " + ec.message());

  Manifest m;
  m.base_dir = out_dir;
  for (int label : {kReal, kFake}) {
    const std::size_t n = label == kReal ? config.n_real : config.n_fake;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(config.seed ^ 0x5eedULL, static_cast<std::uint64_t>(label)));
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::lround(config.test_fraction * static_cast<double>(n)));
    std::vector<Split> split(n, Split::train);
    for (std::size_t i = 0; i < n_test; ++i) split[order[i]] = Split::test;
    for (std::size_t i = 0; i < n; ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "clips/%s_%05zu.clpt", label == kReal ? "real" : "fake", i);
      m.records.push_back({name, label, split[i], config.frames, 30.0});
    }
  }
  parallel_for(m.records.size(), [&](std::size_t i) {
    const ClipRecord& r = m.records[i];
    const std::size_t index = r.label == kReal ? i : i - config.n_real;
    write_clip(m.resolve(r), synth_clip(config, r.label, index));
  });
  write_manifest(m, out_dir / "manifest.csv");
  return m;
}

}  // namespace stfl
