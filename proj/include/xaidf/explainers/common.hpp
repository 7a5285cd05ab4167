#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <vector>

#include "xaidf/classifier/classifier.hpp"
#include "xaidf/error.hpp"
#include "xaidf/imaging/image.hpp"

namespace xaidf {

inline constexpr std::size_t kExplainBatch = 64;

// Scores `count` perturbations produced on demand by `make`, in index order and
// in chunks of kExplainBatch, so only one chunk of images is alive at a time.
inline std::vector<double> score_perturbations(const Classifier& classifier, std::size_t count, std::size_t target,
                                               const std::function<Image(std::size_t)>& make) {
  std::vector<double> scores;
  scores.reserve(count);
  std::vector<Image> chunk;
  chunk.reserve(kExplainBatch);
  for (std::size_t start = 0; start < count; start += kExplainBatch) {
    chunk.clear();
    const std::size_t end = std::min(count, start + kExplainBatch);
    for (std::size_t i = start; i < end; ++i) chunk.push_back(make(i));
    for (const auto& p : classifier.predict_batch(chunk)) scores.push_back(p.probability(target));
  }
  return scores;
}

inline void check_target(const Classifier& classifier, std::size_t target) {
  if (target >= classifier.class_names()->size()) {
    throw InvalidArgument("target class index " + std::to_string(target) + " out of range");
  }
}

inline void check_segmentation(const Image& image, const SegmentationMap& segmentation) {
  if (segmentation.height() != image.height() || segmentation.width() != image.width()) {
    throw InvalidArgument("segmentation dimensions differ from the image");
  }
}

// Per-pixel blend: out = a where keep[segment] else b.
inline Image compose_by_segment(const Image& a, const Image& b, const SegmentationMap& segmentation,
                                const std::vector<std::uint8_t>& keep) {
  const auto labels = segmentation.labels();
  std::vector<double> data(a.size());
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const Image& src = keep[static_cast<std::size_t>(labels[p])] ? a : b;
    for (int c = 0; c < kChannels; ++c) data[p * kChannels + c] = src.data()[p * kChannels + c];
  }
  return Image(a.height(), a.width(), std::move(data));
}

}  // namespace xaidf
