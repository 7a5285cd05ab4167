#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "xaidf/classifier/classifier.hpp"
#include "xaidf/error.hpp"
#include "xaidf/imaging/image.hpp"
#include "xaidf/seeding.hpp"

namespace xaidf {

struct NesConfig {
  double sigma = 0.001;
  int n_samples = 40;
  int max_iterations = 50;
  double max_distortion = 16.0 / 255.0;
  double learning_rate = 1.0 / 255.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(sigma > 0.0)) throw InvalidArgument("NES sigma must be positive");
    if (n_samples < 1) throw InvalidArgument("NES needs n_samples >= 1");
    if (max_iterations < 1) throw InvalidArgument("NES needs max_iterations >= 1");
    if (!(max_distortion > 0.0 && max_distortion <= 1.0)) throw InvalidArgument("NES epsilon must be in (0,1]");
    if (!(learning_rate > 0.0)) throw InvalidArgument("NES learning rate must be positive");
    if (learning_rate > max_distortion) {
      throw InvalidArgument("NES learning rate (alpha) must not exceed the distortion budget (epsilon)");
    }
  }
};

struct AttackOutcome {
  Image adversarial;
  bool flipped = false;
  int iterations_used = 0;  // gradient steps taken
  std::vector<double> probability_trace;  // real-class probability at every check
  std::size_t queries = 0;  // images sent to the classifier
  std::optional<Prediction> final_prediction;
};

// Query cost of an attack that took `iterations_used` steps: one check before
// every step plus a final check, and 2n images per gradient estimate.
inline std::size_t nes_expected_queries(int iterations_used, int n_samples) {
  return 1 + static_cast<std::size_t>(iterations_used) * (2 * static_cast<std::size_t>(n_samples) + 1);
}

namespace detail {

inline std::vector<std::size_t> masked_coordinates(const Image& image, const BinaryMask& mask) {
  if (mask.height() != image.height() || mask.width() != image.width()) {
    throw InvalidArgument("mask dimensions differ from the image");
  }
  std::vector<std::size_t> coords;
  coords.reserve(mask.count() * kChannels);
  const auto bits = mask.bits();
  for (std::size_t p = 0; p < bits.size(); ++p) {
    if (!bits[p]) continue;
    for (int c = 0; c < kChannels; ++c) coords.push_back(p * kChannels + c);
  }
  return coords;
}

inline std::vector<double> gradient_on_coordinates(const Classifier& classifier, const Image& image,
                                                   const std::vector<std::size_t>& coords, std::size_t real_index,
                                                   double sigma, int n, std::uint64_t seed) {
  std::vector<double> grad(coords.size(), 0.0);
  if (coords.empty()) return grad;
  std::vector<std::vector<double>> noise(static_cast<std::size_t>(n));
  std::vector<Image> batch;
  batch.reserve(2 * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    // Each sample's noise depends only on (seed, j).
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto& u = noise[static_cast<std::size_t>(j)];
    u.resize(coords.size());
    for (double& v : u) v = normal(rng);
    std::vector<double> plus = image.data();
    std::vector<double> minus = image.data();
    for (std::size_t k = 0; k < coords.size(); ++k) {
      plus[coords[k]] += sigma * u[k];
      minus[coords[k]] -= sigma * u[k];
    }
    batch.push_back(Image::clamped(image.height(), image.width(), std::move(plus)));
    batch.push_back(Image::clamped(image.height(), image.width(), std::move(minus)));
  }
  const auto preds = classifier.predict_batch(batch);
  for (int j = 0; j < n; ++j) {
    const double diff = preds[2 * static_cast<std::size_t>(j)].probability(real_index) -
                        preds[2 * static_cast<std::size_t>(j) + 1].probability(real_index);
    const auto& u = noise[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < coords.size(); ++k) grad[k] += diff * u[k];
  }
  const double scale = 1.0 / (2.0 * n * sigma);
  for (double& g : grad) g *= scale;
  return grad;
}

}  // namespace detail

/// Antithetic NES estimate of the gradient of the real-class probability:
///   g = 1/(2 n sigma) * sum_j [f(x + sigma u_j M) - f(x - sigma u_j M)] u_j
/// with Gaussian noise drawn only on masked coordinates. Returns a full-size
/// vector (H*W*3, interleaved) that is exactly zero outside the mask.
/// Costs 2n classifier evaluations.
inline std::vector<double> estimate_gradient(const Classifier& classifier, const Image& image, const BinaryMask& mask,
                                             double sigma, int n, std::uint64_t seed) {
  if (!(sigma > 0.0) || n < 1) throw InvalidArgument("gradient estimate needs sigma > 0 and n >= 1");
  const std::size_t real = classifier.real_index();
  const auto coords = detail::masked_coordinates(image, mask);
  const auto masked = detail::gradient_on_coordinates(classifier, image, coords, real, sigma, n, seed);
  std::vector<double> full(image.size(), 0.0);
  for (std::size_t k = 0; k < coords.size(); ++k) full[coords[k]] = masked[k];
  return full;
}

/// Masked sign-gradient ascent on the real-class probability. Each iteration
/// first checks the prediction (stopping once it is "real"), then estimates the
/// gradient, steps by alpha * sign(g) on masked coordinates, projects the
/// cumulative perturbation onto the epsilon ball around the input and clamps
/// to [0,1]. A final check follows the last step so the outcome always carries
/// the prediction for the returned image.
inline AttackOutcome nes_attack(const Classifier& classifier, const Image& image, const BinaryMask& mask,
                                const NesConfig& config) {
  config.validate();
  const std::size_t real = classifier.real_index();
  const auto coords = detail::masked_coordinates(image, mask);
  const auto& original = image.data();

  AttackOutcome out;
  out.adversarial = image;
  for (int it = 0;; ++it) {
    auto prediction = classifier.predict(out.adversarial);
    ++out.queries;
    out.probability_trace.push_back(prediction.real_probability());
    const bool real_now = prediction.is_real();
    out.final_prediction = std::move(prediction);
    if (real_now) {
      out.flipped = true;
      return out;
    }
    if (it == config.max_iterations || coords.empty()) return out;

    const auto grad = detail::gradient_on_coordinates(classifier, out.adversarial, coords, real, config.sigma,
                                                      config.n_samples,
                                                      derive_seed(config.seed, static_cast<std::uint64_t>(it)));
    out.queries += 2 * static_cast<std::size_t>(config.n_samples);
    std::vector<double> next = out.adversarial.data();
    for (std::size_t k = 0; k < coords.size(); ++k) {
      const std::size_t i = coords[k];
      const double step = grad[k] > 0.0 ? config.learning_rate : (grad[k] < 0.0 ? -config.learning_rate : 0.0);
      const double lo = std::max(0.0, original[i] - config.max_distortion);
      const double hi = std::min(1.0, original[i] + config.max_distortion);
      next[i] = std::clamp(next[i] + step, lo, hi);
    }
    out.adversarial = Image(image.height(), image.width(), std::move(next));
    ++out.iterations_used;
  }
}

}  // namespace xaidf
