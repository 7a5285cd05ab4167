#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "xaidf/classifier/classifier.hpp"
#include "xaidf/error.hpp"
#include "xaidf/explainers/common.hpp"
#include "xaidf/explainers/weighted_regression.hpp"
#include "xaidf/imaging/image.hpp"

namespace xaidf {

struct LimeConfig {
  int n_perturbations = 2000;
  double ridge = 1.0;
  double kernel_width = 0.25;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_perturbations < 1) throw InvalidArgument("LIME needs n_perturbations >= 1");
    if (!(ridge > 0.0)) throw InvalidArgument("LIME ridge penalty must be positive");
    if (!(kernel_width > 0.0)) throw InvalidArgument("LIME kernel width must be positive");
  }
};

// Interpretable samples: row 0 is all ones, the rest Bernoulli(0.5) per segment.
inline std::vector<std::vector<std::uint8_t>> lime_samples(int segments, const LimeConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<std::vector<std::uint8_t>> z(static_cast<std::size_t>(config.n_perturbations),
                                           std::vector<std::uint8_t>(static_cast<std::size_t>(segments), 1));
  for (std::size_t i = 1; i < z.size(); ++i) {
    for (auto& bit : z[i]) bit = static_cast<std::uint8_t>(coin(rng));
  }
  return z;
}

// exp(-D^2 / width^2) with D the cosine distance between z and the all-ones vector.
inline double lime_proximity(const std::vector<std::uint8_t>& z, double kernel_width) {
  double on = 0.0;
  for (auto b : z) on += b;
  const double distance = on > 0.0 ? 1.0 - on / (std::sqrt(on) * std::sqrt(static_cast<double>(z.size()))) : 1.0;
  return std::exp(-(distance * distance) / (kernel_width * kernel_width));
}

/// Weighted ridge surrogate of `responses` on the binary samples. The
/// intercept is not penalized.
inline RegressionFit lime_surrogate(const std::vector<std::vector<std::uint8_t>>& samples,
                                    const std::vector<double>& responses, const LimeConfig& config) {
  if (samples.empty() || samples.size() != responses.size()) {
    throw InvalidArgument("LIME needs one response per sample");
  }
  const auto n = static_cast<Eigen::Index>(samples.size());
  const auto d = static_cast<Eigen::Index>(samples.front().size());
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& z = samples[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = z[static_cast<std::size_t>(j)];
    y(i) = responses[static_cast<std::size_t>(i)];
    w(i) = lime_proximity(z, config.kernel_width);
  }
  return weighted_ridge(x, y, w, config.ridge, true);
}

// Per-segment mean colour, used as the "switched off" fill.
inline Image segment_mean_image(const Image& image, const SegmentationMap& segmentation) {
  const auto s = static_cast<std::size_t>(segmentation.segment_count());
  std::vector<double> sums(s * kChannels, 0.0);
  const auto labels = segmentation.labels();
  for (std::size_t p = 0; p < labels.size(); ++p) {
    for (int c = 0; c < kChannels; ++c) sums[static_cast<std::size_t>(labels[p]) * kChannels + c] += image.data()[p * kChannels + c];
  }
  for (std::size_t k = 0; k < s; ++k) {
    for (int c = 0; c < kChannels; ++c) sums[k * kChannels + c] /= static_cast<double>(segmentation.segment_size(static_cast<int>(k)));
  }
  std::vector<double> data(image.size());
  for (std::size_t p = 0; p < labels.size(); ++p) {
    for (int c = 0; c < kChannels; ++c) data[p * kChannels + c] = sums[static_cast<std::size_t>(labels[p]) * kChannels + c];
  }
  return Image::clamped(image.height(), image.width(), std::move(data));
}

struct LimeExplanation {
  SegmentScores scores;
  RegressionFit fit;
};

inline LimeExplanation explain_lime_detailed(const Classifier& classifier, const Image& image, std::size_t target,
                                             const SegmentationMap& segmentation, const LimeConfig& config) {
  config.validate();
  check_target(classifier, target);
  check_segmentation(image, segmentation);
  const auto samples = lime_samples(segmentation.segment_count(), config);
  const Image filler = segment_mean_image(image, segmentation);
  const auto responses = score_perturbations(classifier, samples.size(), target, [&](std::size_t i) {
    return compose_by_segment(image, filler, segmentation, samples[i]);
  });
  auto fit = lime_surrogate(samples, responses, config);
  std::vector<double> coef(fit.coefficients.data(), fit.coefficients.data() + fit.coefficients.size());
  return {SegmentScores(std::move(coef)), std::move(fit)};
}

// Surrogate coefficients, one per segment.
inline SegmentScores explain_lime(const Classifier& classifier, const Image& image, std::size_t target,
                                  const SegmentationMap& segmentation, const LimeConfig& config) {
  return explain_lime_detailed(classifier, image, target, segmentation, config).scores;
}

}  // namespace xaidf
