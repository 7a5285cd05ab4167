#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "xaidf/classifier/classifier.hpp"
#include "xaidf/error.hpp"

namespace xaidf {

// Rectangle plus checkerboard the synthetic detector looks for.
struct PlantedPatternSpec {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
  int phase = 1;  // +1 or -1
  double gain = 40.0;
  double threshold = 0.3;

  // +-1 checkerboard value at absolute pixel (y, x).
  int pattern_at(int y, int x) const noexcept {
    return ((y - top) + (x - left)) % 2 == 0 ? phase : -phase;
  }

  bool contains(int y, int x) const noexcept {
    return y >= top && y < top + height && x >= left && x < left + width;
  }

  void validate() const {
    if (top < 0 || left < 0 || height < 1 || width < 1) {
      throw InvalidArgument("planted region must have non-negative origin and positive size");
    }
    if (phase != 1 && phase != -1) throw InvalidArgument("pattern phase must be +1 or -1");
    if (!(gain > 0.0)) throw InvalidArgument("gain must be positive");
    if (!std::isfinite(threshold)) throw InvalidArgument("threshold must be finite");
  }
};

inline double logistic(double z) noexcept {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// Correlation of the region with the checkerboard: mean of (2 * gray - 1) * P.
inline double pattern_score(const PlantedPatternSpec& spec, const Image& image) {
  if (spec.top + spec.height > image.height() || spec.left + spec.width > image.width()) {
    throw InvalidArgument("planted region does not fit a " + std::to_string(image.height()) + "x" +
                          std::to_string(image.width()) + " image");
  }
  double sum = 0.0;
  for (int y = spec.top; y < spec.top + spec.height; ++y) {
    for (int x = spec.left; x < spec.left + spec.width; ++x) {
      sum += (2.0 * image.gray(y, x) - 1.0) * spec.pattern_at(y, x);
    }
  }
  return sum / (static_cast<double>(spec.height) * spec.width);
}

/// Deterministic two-class ("real", "fake") detector:
/// p_fake = logistic(gain * (pattern_score - threshold)).
class SyntheticDetector final : public Classifier {
 public:
  explicit SyntheticDetector(PlantedPatternSpec spec)
      : spec_(spec), names_(std::make_shared<const std::vector<std::string>>(
                         std::vector<std::string>{"real", "fake"})) {
    spec_.validate();
  }

  const ClassNames& class_names() const override { return names_; }
  const PlantedPatternSpec& spec() const noexcept { return spec_; }

  double fake_probability(const Image& image) const {
    return logistic(spec_.gain * (pattern_score(spec_, image) - spec_.threshold));
  }

 protected:
  std::vector<Prediction> do_predict(std::span<const Image> images) const override {
    std::vector<Prediction> out;
    out.reserve(images.size());
    for (const auto& img : images) {
      const double z = spec_.gain * (pattern_score(spec_, img) - spec_.threshold);
      out.emplace_back(std::vector<double>{logistic(-z), logistic(z)}, names_);
    }
    return out;
  }

 private:
  PlantedPatternSpec spec_;
  ClassNames names_;
};

inline ClassifierHandle synthetic_detector(const PlantedPatternSpec& spec) {
  return std::make_shared<const SyntheticDetector>(spec);
}

}  // namespace xaidf
