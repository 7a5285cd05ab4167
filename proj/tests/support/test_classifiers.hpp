#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xaidf/classifier/classifier.hpp"

namespace xaidf::testing {

// Classifier backed by an arbitrary probability function.
class FunctionClassifier final : public Classifier {
 public:
  using Fn = std::function<std::vector<double>(const Image&)>;

  FunctionClassifier(std::vector<std::string> names, Fn fn)
      : names_(std::make_shared<const std::vector<std::string>>(std::move(names))), fn_(std::move(fn)) {}

  const ClassNames& class_names() const override { return names_; }

 protected:
  std::vector<Prediction> do_predict(std::span<const Image> images) const override {
    std::vector<Prediction> out;
    out.reserve(images.size());
    for (const auto& img : images) out.emplace_back(fn_(img), names_);
    return out;
  }

 private:
  ClassNames names_;
  Fn fn_;
};

// {"real", "fake"} classifier from p_fake(image).
inline std::shared_ptr<FunctionClassifier> binary_classifier(std::function<double(const Image&)> p_fake) {
  return std::make_shared<FunctionClassifier>(std::vector<std::string>{"real", "fake"},
                                              [p_fake](const Image& img) {
                                                const double p = p_fake(img);
                                                return std::vector<double>{1.0 - p, p};
                                              });
}

// Always predicts the same distribution.
inline std::shared_ptr<FunctionClassifier> constant_classifier(double p_fake) {
  return binary_classifier([p_fake](const Image&) { return p_fake; });
}

}  // namespace xaidf::testing
