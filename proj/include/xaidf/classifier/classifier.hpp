#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xaidf/error.hpp"
#include "xaidf/imaging/image.hpp"

namespace xaidf {

inline constexpr const char* kRealClass = "real";
inline constexpr double kProbabilitySumTolerance = 1e-5;

using ClassNames = std::shared_ptr<const std::vector<std::string>>;

// Index of the class named "real"; the list must contain it exactly once.
inline std::size_t real_class_index(const std::vector<std::string>& names) {
  const auto n = std::count(names.begin(), names.end(), kRealClass);
  if (n != 1) {
    throw InvalidArgument("class list must contain \"real\" exactly once (found " + std::to_string(n) + ")");
  }
  return static_cast<std::size_t>(std::find(names.begin(), names.end(), kRealClass) - names.begin());
}

// Validated classifier output for one image.
class Prediction {
 public:
  Prediction(std::vector<double> probabilities, ClassNames class_names)
      : probabilities_(std::move(probabilities)), class_names_(std::move(class_names)) {
    if (!class_names_ || class_names_->size() != probabilities_.size() || probabilities_.empty()) {
      throw InvalidArgument("prediction needs one probability per class");
    }
    real_index_ = real_class_index(*class_names_);
    double sum = 0.0;
    for (double p : probabilities_) {
      if (!std::isfinite(p) || p < 0.0) throw InvalidArgument("probabilities must be finite and >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
      throw InvalidArgument("probabilities sum to " + std::to_string(sum) + ", expected 1");
    }
    // First maximum wins ties.
    predicted_ = static_cast<std::size_t>(
        std::max_element(probabilities_.begin(), probabilities_.end()) - probabilities_.begin());
  }

  const std::vector<double>& probabilities() const noexcept { return probabilities_; }
  double probability(std::size_t cls) const { return probabilities_.at(cls); }
  const std::vector<std::string>& class_names() const noexcept { return *class_names_; }
  std::size_t predicted() const noexcept { return predicted_; }
  const std::string& predicted_name() const { return (*class_names_)[predicted_]; }
  std::size_t real_index() const noexcept { return real_index_; }
  bool is_real() const noexcept { return predicted_ == real_index_; }
  double real_probability() const noexcept { return probabilities_[real_index_]; }

  friend bool operator==(const Prediction& a, const Prediction& b) {
    return a.probabilities_ == b.probabilities_ && *a.class_names_ == *b.class_names_;
  }

 private:
  std::vector<double> probabilities_;
  ClassNames class_names_;
  std::size_t predicted_ = 0;
  std::size_t real_index_ = 0;
};

// Black-box image classifier. Implementations must be deterministic and safe
// to call concurrently.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual const ClassNames& class_names() const = 0;

  // One prediction per image, order preserved.
  std::vector<Prediction> predict_batch(std::span<const Image> images) const {
    if (images.empty()) throw InvalidArgument("predict_batch needs a non-empty batch");
    for (const auto& img : images) {
      if (!img.same_shape(images.front())) throw InvalidArgument("batch images must share dimensions");
    }
    return do_predict(images);
  }

  Prediction predict(const Image& image) const {
    return predict_batch(std::span<const Image>(&image, 1)).front();
  }

  std::size_t class_index(const std::string& name) const {
    const auto& names = *class_names();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InvalidArgument("unknown class \"" + name + "\"");
    return static_cast<std::size_t>(it - names.begin());
  }

  std::size_t real_index() const { return real_class_index(*class_names()); }

 protected:
  virtual std::vector<Prediction> do_predict(std::span<const Image> images) const = 0;
};

using ClassifierHandle = std::shared_ptr<const Classifier>;

// Forwards to an inner classifier and tallies how many images it scored.
class CountingClassifier final : public Classifier {
 public:
  explicit CountingClassifier(ClassifierHandle inner) : inner_(std::move(inner)) {}

  const ClassNames& class_names() const override { return inner_->class_names(); }
  std::size_t images_scored() const noexcept { return images_.load(); }
  std::size_t batches() const noexcept { return batches_.load(); }
  void reset() noexcept {
    images_ = 0;
    batches_ = 0;
  }

 protected:
  std::vector<Prediction> do_predict(std::span<const Image> images) const override {
    images_ += images.size();
    ++batches_;
    return inner_->predict_batch(images);
  }

 private:
  ClassifierHandle inner_;
  mutable std::atomic<std::size_t> images_{0};
  mutable std::atomic<std::size_t> batches_{0};
};

// Scores `images` in chunks of at most `batch_size`, returning the
// probability of `target` for each.
inline std::vector<double> target_probabilities(const Classifier& classifier, std::span<const Image> images,
                                                std::size_t target, std::size_t batch_size = 64) {
  std::vector<double> out;
  out.reserve(images.size());
  for (std::size_t start = 0; start < images.size(); start += batch_size) {
    const auto chunk = images.subspan(start, std::min(batch_size, images.size() - start));
    for (const auto& p : classifier.predict_batch(chunk)) out.push_back(p.probability(target));
  }
  return out;
}

}  // namespace xaidf
