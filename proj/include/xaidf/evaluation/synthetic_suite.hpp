#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "xaidf/classifier/synthetic.hpp"
#include "xaidf/error.hpp"
#include "xaidf/imaging/image.hpp"
#include "xaidf/seeding.hpp"

namespace xaidf {

// Desk-scale stand-in for a deepfake test set: smooth random backgrounds with
// a checkerboard of random amplitude planted in the detector's region.
struct SyntheticSuiteSpec {
  int height = 64;
  int width = 64;
  PlantedPatternSpec pattern{.top = 26, .left = 22, .height = 12, .width = 12};
  double amplitude_min = 0.33;
  double amplitude_max = 0.38;
  int blobs = 6;
};

/// Smooth colour background from a handful of Gaussian blobs, kept in [0.2, 0.8].
inline Image synthetic_background(int height, int width, int blobs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> base(kChannels);
  for (double& b : base) b = 0.3 + 0.4 * unit(rng);
  struct Blob {
    double y, x, radius;
    double color[kChannels];
  };
  std::vector<Blob> list(static_cast<std::size_t>(blobs));
  for (auto& b : list) {
    b.y = unit(rng) * height;
    b.x = unit(rng) * width;
    b.radius = (0.1 + 0.2 * unit(rng)) * std::min(height, width);
    for (double& c : b.color) c = unit(rng) - 0.5;
  }
  std::vector<double> data(static_cast<std::size_t>(height) * width * kChannels);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < kChannels; ++c) {
        double v = base[static_cast<std::size_t>(c)];
        for (const auto& b : list) {
          const double d2 = ((y - b.y) * (y - b.y) + (x - b.x) * (x - b.x)) / (b.radius * b.radius);
          v += 0.6 * b.color[c] * std::exp(-d2);
        }
        data[(static_cast<std::size_t>(y) * width + x) * kChannels + c] = std::clamp(v, 0.2, 0.8);
      }
    }
  }
  return Image(height, width, std::move(data));
}

// Adds amplitude * P / 2 to every channel inside the region. On a smooth
// background the detector's pattern score is then close to `amplitude`
// (exactly, for a constant background). Values are clamped to [0,1].
inline Image plant_pattern(const Image& background, const PlantedPatternSpec& pattern, double amplitude) {
  if (!(amplitude >= 0.0 && amplitude <= 1.0)) throw InvalidArgument("pattern amplitude must be in [0,1]");
  std::vector<double> data = background.data();
  for (int y = pattern.top; y < pattern.top + pattern.height; ++y) {
    for (int x = pattern.left; x < pattern.left + pattern.width; ++x) {
      for (int c = 0; c < kChannels; ++c) data[background.index(y, x, c)] += 0.5 * amplitude * pattern.pattern_at(y, x);
    }
  }
  return Image::clamped(background.height(), background.width(), std::move(data));
}

struct SyntheticSample {
  Image image;
  double amplitude;
};

inline SyntheticSample synthetic_fake(const SyntheticSuiteSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "amplitude"));
  const double amplitude = std::uniform_real_distribution<double>(spec.amplitude_min, spec.amplitude_max)(rng);
  const Image bg = synthetic_background(spec.height, spec.width, spec.blobs, derive_seed(seed, "background"));
  return {plant_pattern(bg, spec.pattern, amplitude), amplitude};
}

inline std::vector<SyntheticSample> synthetic_suite(const SyntheticSuiteSpec& spec, int count, std::uint64_t seed) {
  std::vector<SyntheticSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(synthetic_fake(spec, derive_seed(seed, static_cast<std::uint64_t>(i))));
  return out;
}

}  // namespace xaidf
