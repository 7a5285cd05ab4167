#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "xaidf/error.hpp"
#include "xaidf/imaging/image.hpp"

namespace xaidf {

// Overlay colormap: entry i = (i, 0, 255 - i), a linear blue -> red ramp.
inline constexpr std::array<std::array<std::uint8_t, 3>, 256> kOverlayColormap = [] {
  std::array<std::array<std::uint8_t, 3>, 256> table{};
  for (int i = 0; i < 256; ++i) {
    table[static_cast<std::size_t>(i)] = {static_cast<std::uint8_t>(i), 0, static_cast<std::uint8_t>(255 - i)};
  }
  return table;
}();

inline constexpr double kOverlayAlpha = 0.5;

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
}

namespace detail {

struct RawPng {
  int height = 0;
  int width = 0;
  int channels = 0;  // 1 (gray) or 3 (RGB)
  std::vector<std::uint8_t> bytes;
};

// Reads an 8-bit PNG without alpha as gray or RGB, rejecting anything else.
inline RawPng read_png(const std::string& path, bool allow_gray) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError(path + ": cannot read PNG: " + img.message);
  }
  const auto fail = [&](const std::string& why) {
    png_image_free(&img);
    throw IoError(path + ": " + why);
  };
  if (img.format & PNG_FORMAT_FLAG_LINEAR) fail("16-bit PNG is not supported; expected 8-bit RGB");
  if (img.format & PNG_FORMAT_FLAG_ALPHA) fail("PNG has an alpha channel; expected 8-bit RGB");
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  if (!color && !allow_gray) fail("grayscale PNG; expected 8-bit RGB");

  RawPng raw;
  raw.height = static_cast<int>(img.height);
  raw.width = static_cast<int>(img.width);
  raw.channels = color ? 3 : 1;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  raw.bytes.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, raw.bytes.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError(path + ": cannot decode PNG: " + msg);
  }
  return raw;
}

inline void write_png(const std::string& path, int height, int width, int channels,
                      const std::vector<std::uint8_t>& bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw IoError(path + ": cannot write PNG: " + img.message);
  }
}

}  // namespace detail

inline Image load_image(const std::string& path) {
  const auto raw = detail::read_png(path, false);
  std::vector<double> data(raw.bytes.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = raw.bytes[i] / 255.0;
  try {
    return Image(raw.height, raw.width, std::move(data));
  } catch (const InvalidArgument& e) {
    throw IoError(path + ": " + e.what());
  }
}

inline void save_image(const Image& image, const std::string& path) {
  std::vector<std::uint8_t> bytes(image.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(image.data()[i]);
  detail::write_png(path, image.height(), image.width(), 3, bytes);
}

// Loads a 0/255 mask from a gray or RGB PNG. Any other value is an error.
inline BinaryMask load_mask(const std::string& path) {
  const auto raw = detail::read_png(path, true);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(raw.height) * raw.width);
  for (std::size_t p = 0; p < bits.size(); ++p) {
    const std::uint8_t first = raw.bytes[p * raw.channels];
    for (int c = 0; c < raw.channels; ++c) {
      const std::uint8_t v = raw.bytes[p * raw.channels + c];
      if ((v != 0 && v != 255) || v != first) {
        throw IoError(path + ": mask is not binary (expected only 0 and 255)");
      }
    }
    bits[p] = first == 255 ? 1 : 0;
  }
  return BinaryMask(raw.height, raw.width, std::move(bits));
}

inline void save_mask(const BinaryMask& mask, const std::string& path) {
  std::vector<std::uint8_t> bytes(mask.bits().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.bits()[i] ? 255 : 0;
  detail::write_png(path, mask.height(), mask.width(), 1, bytes);
}

// Alpha-blends the min-max normalized saliency, through kOverlayColormap, over the image.
inline void save_overlay(const Image& image, const SaliencyMap& saliency, const std::string& path) {
  if (saliency.height() != image.height() || saliency.width() != image.width()) {
    throw InvalidArgument("overlay saliency dimensions differ from the image");
  }
  const auto values = saliency.values();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  std::vector<std::uint8_t> bytes(image.size());
  for (std::size_t p = 0; p < values.size(); ++p) {
    const double t = range > 0.0 ? (values[p] - lo) / range : 0.0;
    const auto& color = kOverlayColormap[static_cast<std::size_t>(std::lround(t * 255.0))];
    for (int c = 0; c < kChannels; ++c) {
      const double v = (1.0 - kOverlayAlpha) * image.data()[p * kChannels + c] +
                       kOverlayAlpha * (color[static_cast<std::size_t>(c)] / 255.0);
      bytes[p * kChannels + c] = to_byte(v);
    }
  }
  detail::write_png(path, image.height(), image.width(), 3, bytes);
}

inline void save_overlay(const Image& image, const BinaryMask& mask, const std::string& path) {
  std::vector<double> values(mask.bits().begin(), mask.bits().end());
  save_overlay(image, SaliencyMap(mask.height(), mask.width(), std::move(values)), path);
}

}  // namespace xaidf
