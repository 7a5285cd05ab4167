#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "xaidf/classifier/classifier.hpp"
#include "xaidf/error.hpp"
#include "xaidf/explainers/common.hpp"
#include "xaidf/imaging/filters.hpp"
#include "xaidf/imaging/image.hpp"

namespace xaidf {

struct RiseConfig {
  int n_masks = 4000;
  int grid = 7;
  double keep_prob = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_masks < 1) throw InvalidArgument("RISE needs n_masks >= 1");
    if (grid < 1) throw InvalidArgument("RISE grid must be positive");
    if (!(keep_prob > 0.0 && keep_prob < 1.0)) throw InvalidArgument("RISE keep_prob must be in (0,1)");
  }
};

/// Random smooth mask: a grid x grid Bernoulli(p) field bilinearly upsampled
/// to (H + cell) x (W + cell) and cropped at a random offset within one cell.
inline SaliencyMap rise_mask(int height, int width, const RiseConfig& config, std::mt19937_64& rng) {
  const int cell_h = (height + config.grid - 1) / config.grid;
  const int cell_w = (width + config.grid - 1) / config.grid;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> coarse(static_cast<std::size_t>(config.grid) * config.grid);
  for (double& v : coarse) v = unit(rng) < config.keep_prob ? 1.0 : 0.0;
  const int dy = std::uniform_int_distribution<int>(0, cell_h - 1)(rng);
  const int dx = std::uniform_int_distribution<int>(0, cell_w - 1)(rng);
  const SaliencyMap up =
      upsample_bilinear(SaliencyMap(config.grid, config.grid, std::move(coarse)), height + cell_h, width + cell_w);
  std::vector<double> mask(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) mask[static_cast<std::size_t>(y) * width + x] = up.at(y + dy, x + dx);
  }
  return SaliencyMap(height, width, std::move(mask));
}

// saliency(i,j) = sum_m score_m * mask_m(i,j) / (n_masks * p), with
// score_m the target probability of image * mask_m.
inline SaliencyMap explain_rise(const Classifier& classifier, const Image& image, std::size_t target,
                                const RiseConfig& config) {
  config.validate();
  check_target(classifier, target);
  const int h = image.height();
  const int w = image.width();
  std::mt19937_64 rng(config.seed);
  std::vector<double> saliency(image.pixel_count(), 0.0);
  const double norm = 1.0 / (static_cast<double>(config.n_masks) * config.keep_prob);

  std::vector<SaliencyMap> masks;
  masks.reserve(kExplainBatch);
  std::vector<Image> batch;
  batch.reserve(kExplainBatch);
  for (int start = 0; start < config.n_masks; start += static_cast<int>(kExplainBatch)) {
    masks.clear();
    batch.clear();
    const int end = std::min(config.n_masks, start + static_cast<int>(kExplainBatch));
    for (int m = start; m < end; ++m) {
      masks.push_back(rise_mask(h, w, config, rng));
      const auto mv = masks.back().values();
      std::vector<double> data(image.size());
      for (std::size_t p = 0; p < mv.size(); ++p) {
        for (int c = 0; c < kChannels; ++c) data[p * kChannels + c] = image.data()[p * kChannels + c] * mv[p];
      }
      batch.emplace_back(Image::clamped(h, w, std::move(data)));
    }
    const auto preds = classifier.predict_batch(batch);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const double score = preds[i].probability(target) * norm;
      const auto mv = masks[i].values();
      for (std::size_t p = 0; p < mv.size(); ++p) saliency[p] += score * mv[p];
    }
  }
  return SaliencyMap(h, w, std::move(saliency));
}

}  // namespace xaidf
