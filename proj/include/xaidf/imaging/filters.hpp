#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "xaidf/error.hpp"
#include "xaidf/imaging/image.hpp"

namespace xaidf {

// Even kernel sizes are rounded up to the next odd size (128 -> 129).
inline int odd_kernel_size(int kernel_size) {
  if (kernel_size < 1) throw InvalidArgument("blur kernel size must be >= 1");
  return kernel_size % 2 == 0 ? kernel_size + 1 : kernel_size;
}

namespace detail {

// Mirror index without repeating the edge sample (dcb|abcd|cba); handles
// offsets far outside the range by folding periodically.
inline int reflect_101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

inline std::vector<double> gaussian_kernel(int size) {
  const int radius = size / 2;
  const double sigma = size / 6.0;
  std::vector<double> k(static_cast<std::size_t>(size));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace detail

// Separable Gaussian blur, sigma = kernel_size / 6, reflect-101 padding.
inline Image gaussian_blur(const Image& image, int kernel_size) {
  const int size = odd_kernel_size(kernel_size);
  if (size == 1) return image;
  const auto kernel = detail::gaussian_kernel(size);
  const int radius = size / 2;
  const int h = image.height();
  const int w = image.width();
  const auto& src = image.data();

  std::vector<double> horizontal(src.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[kChannels] = {0.0, 0.0, 0.0};
      for (int t = -radius; t <= radius; ++t) {
        const int sx = detail::reflect_101(x + t, w);
        const double kv = kernel[static_cast<std::size_t>(t + radius)];
        const std::size_t base = image.index(y, sx, 0);
        for (int c = 0; c < kChannels; ++c) acc[c] += kv * src[base + c];
      }
      const std::size_t out = image.index(y, x, 0);
      for (int c = 0; c < kChannels; ++c) horizontal[out + c] = acc[c];
    }
  }

  std::vector<double> result(src.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[kChannels] = {0.0, 0.0, 0.0};
      for (int t = -radius; t <= radius; ++t) {
        const int sy = detail::reflect_101(y + t, h);
        const double kv = kernel[static_cast<std::size_t>(t + radius)];
        const std::size_t base = image.index(sy, x, 0);
        for (int c = 0; c < kChannels; ++c) acc[c] += kv * horizontal[base + c];
      }
      const std::size_t out = image.index(y, x, 0);
      for (int c = 0; c < kChannels; ++c) result[out + c] = acc[c];
    }
  }
  return Image::clamped(h, w, std::move(result));
}

// Bilinear resize with half-pixel centers (align_corners = false).
inline SaliencyMap upsample_bilinear(const SaliencyMap& grid, int height, int width) {
  if (height < 1 || width < 1) throw InvalidArgument("upsample target must be non-empty");
  const int gh = grid.height();
  const int gw = grid.width();
  const double scale_y = static_cast<double>(gh) / height;
  const double scale_x = static_cast<double>(gw) / width;

  struct Tap {
    int lo, hi;
    double frac;
  };
  auto taps = [](int out, int in, double scale) {
    std::vector<Tap> result(static_cast<std::size_t>(out));
    for (int i = 0; i < out; ++i) {
      double src = (i + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const int lo = static_cast<int>(std::floor(src));
      const int hi = std::min(lo + 1, in - 1);
      result[static_cast<std::size_t>(i)] = {lo, hi, src - lo};
    }
    return result;
  };
  const auto ty = taps(height, gh, scale_y);
  const auto tx = taps(width, gw, scale_x);

  std::vector<double> out(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    const Tap& a = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const Tap& b = tx[static_cast<std::size_t>(x)];
      const double top = grid.at(a.lo, b.lo) * (1.0 - b.frac) + grid.at(a.lo, b.hi) * b.frac;
      const double bottom = grid.at(a.hi, b.lo) * (1.0 - b.frac) + grid.at(a.hi, b.hi) * b.frac;
      out[static_cast<std::size_t>(y) * width + x] = top * (1.0 - a.frac) + bottom * a.frac;
    }
  }
  return SaliencyMap(height, width, std::move(out));
}

}  // namespace xaidf
