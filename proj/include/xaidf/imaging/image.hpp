#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xaidf/error.hpp"

namespace xaidf {

inline constexpr int kChannels = 3;
inline constexpr int kMinImageSide = 8;

// Dense H x W x 3 RGB raster, row-major with interleaved channels, values in [0,1].
class Image {
 public:
  Image() = default;

  Image(int height, int width, std::vector<double> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (height_ < kMinImageSide || width_ < kMinImageSide) {
      throw InvalidArgument("image must be at least " + std::to_string(kMinImageSide) + "x" +
                            std::to_string(kMinImageSide) + ", got " + std::to_string(height_) +
                            "x" + std::to_string(width_));
    }
    if (data_.size() != expected_size()) {
      throw InvalidArgument("image data has " + std::to_string(data_.size()) +
                            " values, expected " + std::to_string(expected_size()));
    }
    for (double v : data_) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw InvalidArgument("image values must be finite and within [0,1]");
      }
    }
  }

  static Image filled(int height, int width, double value) {
    return Image(height, width,
                 std::vector<double>(static_cast<std::size_t>(height) * width * kChannels, value));
  }

  // Clamps into [0,1] before validating; used for perturbed query images.
  static Image clamped(int height, int width, std::vector<double> data) {
    for (double& v : data) v = std::clamp(v, 0.0, 1.0);
    return Image(height, width, std::move(data));
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const noexcept { return data_.size(); }

  double at(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  // Channel mean at a pixel.
  double gray(int y, int x) const noexcept {
    const std::size_t i = index(y, x, 0);
    return (data_[i] + data_[i + 1] + data_[i + 2]) / 3.0;
  }

  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t expected_size() const noexcept {
    return static_cast<std::size_t>(height_) * width_ * kChannels;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Per-pixel real-valued raster. Also used for small real grids (RISE/SOBOL masks).
class SaliencyMap {
 public:
  SaliencyMap() = default;

  SaliencyMap(int height, int width, std::vector<double> values)
      : height_(height), width_(width), values_(std::move(values)) {
    if (height_ < 1 || width_ < 1) throw InvalidArgument("saliency map must be non-empty");
    if (values_.size() != static_cast<std::size_t>(height_) * width_) {
      throw InvalidArgument("saliency map has " + std::to_string(values_.size()) +
                            " values, expected " + std::to_string(height_ * width_));
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw InvalidArgument("saliency values must be finite");
    }
  }

  static SaliencyMap filled(int height, int width, double value) {
    return SaliencyMap(height, width,
                       std::vector<double>(static_cast<std::size_t>(height) * width, value));
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  double at(int y, int x) const noexcept {
    return values_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

// Superpixel labeling; labels are dense in [0, S-1].
class SegmentationMap {
 public:
  SegmentationMap() = default;

  SegmentationMap(int height, int width, std::vector<int> labels)
      : height_(height), width_(width), labels_(std::move(labels)) {
    if (height_ < 1 || width_ < 1) throw InvalidArgument("segmentation must be non-empty");
    if (labels_.size() != static_cast<std::size_t>(height_) * width_) {
      throw InvalidArgument("segmentation has " + std::to_string(labels_.size()) +
                            " labels, expected " + std::to_string(height_ * width_));
    }
    int max_label = -1;
    for (int l : labels_) {
      if (l < 0) throw InvalidArgument("segment labels must be non-negative");
      max_label = std::max(max_label, l);
    }
    segment_count_ = max_label + 1;
    sizes_.assign(static_cast<std::size_t>(segment_count_), 0);
    for (int l : labels_) ++sizes_[static_cast<std::size_t>(l)];
    for (int s = 0; s < segment_count_; ++s) {
      if (sizes_[static_cast<std::size_t>(s)] == 0) {
        throw InvalidArgument("segment label " + std::to_string(s) + " is unused; labels must be dense");
      }
    }
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int segment_count() const noexcept { return segment_count_; }
  int at(int y, int x) const noexcept { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const int> labels() const noexcept { return labels_; }
  std::size_t segment_size(int s) const { return sizes_.at(static_cast<std::size_t>(s)); }

  // True when every segment forms one 4-connected component.
  bool segments_are_connected() const {
    std::vector<char> seen(labels_.size(), 0);
    std::vector<char> label_seen(static_cast<std::size_t>(segment_count_), 0);
    std::queue<std::size_t> frontier;
    for (std::size_t start = 0; start < labels_.size(); ++start) {
      if (seen[start]) continue;
      const int label = labels_[start];
      if (label_seen[static_cast<std::size_t>(label)]) return false;
      label_seen[static_cast<std::size_t>(label)] = 1;
      seen[start] = 1;
      frontier.push(start);
      while (!frontier.empty()) {
        const std::size_t i = frontier.front();
        frontier.pop();
        const int y = static_cast<int>(i / width_);
        const int x = static_cast<int>(i % width_);
        const int dy[] = {-1, 1, 0, 0};
        const int dx[] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
          const int ny = y + dy[d];
          const int nx = x + dx[d];
          if (ny < 0 || ny >= height_ || nx < 0 || nx >= width_) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * width_ + nx;
          if (!seen[j] && labels_[j] == label) {
            seen[j] = 1;
            frontier.push(j);
          }
        }
      }
    }
    return true;
  }

  friend bool operator==(const SegmentationMap& a, const SegmentationMap& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.labels_ == b.labels_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  int segment_count_ = 0;
  std::vector<int> labels_;
  std::vector<std::size_t> sizes_;
};

// One score per segment, aligned with SegmentationMap labels.
class SegmentScores {
 public:
  SegmentScores() = default;

  explicit SegmentScores(std::vector<double> scores) : scores_(std::move(scores)) {
    for (double v : scores_) {
      if (!std::isfinite(v)) throw InvalidArgument("segment scores must be finite");
    }
  }

  std::size_t size() const noexcept { return scores_.size(); }
  double operator[](std::size_t i) const noexcept { return scores_[i]; }
  std::span<const double> values() const noexcept { return scores_; }

  friend bool operator==(const SegmentScores&, const SegmentScores&) = default;

 private:
  std::vector<double> scores_;
};

class BinaryMask {
 public:
  BinaryMask() = default;

  BinaryMask(int height, int width, std::vector<std::uint8_t> bits)
      : height_(height), width_(width), bits_(std::move(bits)) {
    if (bits_.size() != static_cast<std::size_t>(height_) * width_) {
      throw InvalidArgument("mask has " + std::to_string(bits_.size()) + " entries, expected " +
                            std::to_string(height_ * width_));
    }
    for (auto& b : bits_) b = b ? 1 : 0;
  }

  static BinaryMask filled(int height, int width, bool value) {
    return BinaryMask(height, width,
                      std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width, value));
  }

  // Axis-aligned rectangle, clipped to the raster.
  static BinaryMask rectangle(int height, int width, int top, int left, int rect_height,
                              int rect_width) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(height) * width, 0);
    for (int y = std::max(0, top); y < std::min(height, top + rect_height); ++y) {
      for (int x = std::max(0, left); x < std::min(width, left + rect_width); ++x) {
        bits[static_cast<std::size_t>(y) * width + x] = 1;
      }
    }
    return BinaryMask(height, width, std::move(bits));
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  bool at(int y, int x) const noexcept { return bits_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }

  // Every set pixel of this mask is also set in `other`.
  bool subset_of(const BinaryMask& other) const noexcept {
    if (bits_.size() != other.bits_.size()) return false;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if (bits_[i] && !other.bits_[i]) return false;
    }
    return true;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace xaidf
