#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "xaidf/error.hpp"
#include "xaidf/imaging/image.hpp"

namespace xaidf {

// Mean saliency per segment.
inline SegmentScores score_segments(const SaliencyMap& saliency, const SegmentationMap& segmentation) {
  if (saliency.height() != segmentation.height() || saliency.width() != segmentation.width()) {
    throw InvalidArgument("saliency map and segmentation dimensions differ");
  }
  const auto s = static_cast<std::size_t>(segmentation.segment_count());
  std::vector<double> sums(s, 0.0);
  const auto labels = segmentation.labels();
  const auto values = saliency.values();
  for (std::size_t i = 0; i < labels.size(); ++i) sums[static_cast<std::size_t>(labels[i])] += values[i];
  for (std::size_t k = 0; k < s; ++k) sums[k] /= static_cast<double>(segmentation.segment_size(static_cast<int>(k)));
  return SegmentScores(std::move(sums));
}

// Segment labels ordered by descending score; equal scores keep the lower label first.
inline std::vector<int> rank_segments(const SegmentScores& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  return order;
}

inline BinaryMask segments_mask(const SegmentationMap& segmentation, const std::vector<int>& chosen) {
  std::vector<std::uint8_t> selected(static_cast<std::size_t>(segmentation.segment_count()), 0);
  for (int s : chosen) selected.at(static_cast<std::size_t>(s)) = 1;
  const auto labels = segmentation.labels();
  std::vector<std::uint8_t> bits(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) bits[i] = selected[static_cast<std::size_t>(labels[i])];
  return BinaryMask(segmentation.height(), segmentation.width(), std::move(bits));
}

// Mask over the min(k, S) highest-scoring segments.
inline BinaryMask top_k_mask(const SegmentScores& scores, const SegmentationMap& segmentation, int k) {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (scores.size() != static_cast<std::size_t>(segmentation.segment_count())) {
    throw InvalidArgument("score count does not match segment count");
  }
  auto order = rank_segments(scores);
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(k)));
  return segments_mask(segmentation, order);
}

}  // namespace xaidf
