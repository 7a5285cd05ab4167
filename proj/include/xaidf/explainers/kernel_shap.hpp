#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "xaidf/classifier/classifier.hpp"
#include "xaidf/error.hpp"
#include "xaidf/explainers/common.hpp"
#include "xaidf/explainers/weighted_regression.hpp"
#include "xaidf/imaging/filters.hpp"
#include "xaidf/imaging/image.hpp"

namespace xaidf {

struct ShapConfig {
  int n_evaluations = 2000;
  int blur_kernel = 128;  // rounded up to 129
  double ridge = 1e-6;    // sampled mode only; the exhaustive solve is exact
  std::uint64_t seed = 0;

  void validate() const {
    if (n_evaluations < 1) throw InvalidArgument("SHAP needs n_evaluations >= 1");
    if (blur_kernel < 1) throw InvalidArgument("SHAP blur kernel must be positive");
    if (ridge < 0.0) throw InvalidArgument("SHAP ridge must be non-negative");
  }
};

using Coalition = std::vector<std::uint8_t>;

// Evaluates a batch of coalitions; must return one value per coalition.
using CoalitionGame = std::function<std::vector<double>(const std::vector<Coalition>&)>;

// Shapley kernel weight pi(s) = (d-1) / (C(d,s) s (d-s)) for 0 < s < d.
inline double shapley_kernel_weight(int d, int s) {
  const double log_binom = std::lgamma(d + 1.0) - std::lgamma(s + 1.0) - std::lgamma(d - s + 1.0);
  return (d - 1.0) / (std::exp(log_binom) * s * (d - s));
}

inline bool kernel_shap_is_exhaustive(int d, const ShapConfig& config) {
  return d < 31 && (std::int64_t{1} << d) <= config.n_evaluations;
}

/// KernelSHAP over d players. Enumerates all 2^d coalitions when that fits in
/// the evaluation budget, otherwise samples `n_evaluations` proper coalitions
/// with probability proportional to the Shapley kernel (duplicates are scored
/// once and weighted by multiplicity). The efficiency constraint
/// sum(phi) = f(full) - f(empty) is imposed by eliminating the last player.
inline std::vector<double> kernel_shap(const CoalitionGame& game, int d, const ShapConfig& config) {
  config.validate();
  if (d < 2) throw InvalidArgument("KernelSHAP needs at least 2 players, got " + std::to_string(d));

  std::vector<Coalition> coalitions;
  std::vector<double> weights;
  const bool exhaustive = kernel_shap_is_exhaustive(d, config);
  if (exhaustive) {
    for (std::int64_t bits = 1; bits + 1 < (std::int64_t{1} << d); ++bits) {
      Coalition z(static_cast<std::size_t>(d));
      int size = 0;
      for (int i = 0; i < d; ++i) {
        z[static_cast<std::size_t>(i)] = (bits >> i) & 1;
        size += z[static_cast<std::size_t>(i)];
      }
      coalitions.push_back(std::move(z));
      weights.push_back(shapley_kernel_weight(d, size));
    }
  } else {
    std::vector<double> size_weights(static_cast<std::size_t>(d - 1));
    for (int s = 1; s < d; ++s) size_weights[static_cast<std::size_t>(s - 1)] = (d - 1.0) / (s * static_cast<double>(d - s));
    std::discrete_distribution<int> pick_size(size_weights.begin(), size_weights.end());
    std::mt19937_64 rng(config.seed);
    std::vector<int> players(static_cast<std::size_t>(d));
    std::map<Coalition, std::size_t> index;
    for (int draw = 0; draw < config.n_evaluations; ++draw) {
      const int size = pick_size(rng) + 1;
      for (int i = 0; i < d; ++i) players[static_cast<std::size_t>(i)] = i;
      Coalition z(static_cast<std::size_t>(d), 0);
      // Partial Fisher-Yates: the first `size` entries are a uniform subset.
      for (int i = 0; i < size; ++i) {
        const int j = std::uniform_int_distribution<int>(i, d - 1)(rng);
        std::swap(players[static_cast<std::size_t>(i)], players[static_cast<std::size_t>(j)]);
        z[static_cast<std::size_t>(players[static_cast<std::size_t>(i)])] = 1;
      }
      const auto [it, inserted] = index.emplace(z, coalitions.size());
      if (inserted) {
        coalitions.push_back(std::move(z));
        weights.push_back(1.0);
      } else {
        weights[it->second] += 1.0;
      }
    }
  }

  std::vector<Coalition> queries;
  queries.reserve(coalitions.size() + 2);
  queries.emplace_back(static_cast<std::size_t>(d), 1);
  queries.emplace_back(static_cast<std::size_t>(d), 0);
  queries.insert(queries.end(), coalitions.begin(), coalitions.end());
  const std::vector<double> values = game(queries);
  if (values.size() != queries.size()) throw InvalidArgument("coalition game returned the wrong number of values");
  const double f_full = values[0];
  const double f_empty = values[1];
  const double total = f_full - f_empty;

  const auto n = static_cast<Eigen::Index>(coalitions.size());
  const Eigen::Index free = d - 1;
  Eigen::MatrixXd x(n, free);
  Eigen::VectorXd y(n);
  Eigen::VectorXd w(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& z = coalitions[static_cast<std::size_t>(r)];
    const double last = z[static_cast<std::size_t>(d - 1)];
    for (Eigen::Index i = 0; i < free; ++i) x(r, i) = z[static_cast<std::size_t>(i)] - last;
    y(r) = values[static_cast<std::size_t>(r) + 2] - f_empty - last * total;
    w(r) = weights[static_cast<std::size_t>(r)];
  }
  const auto fit = weighted_ridge(x, y, w, exhaustive ? 0.0 : config.ridge, false);
  std::vector<double> phi(static_cast<std::size_t>(d));
  double assigned = 0.0;
  for (Eigen::Index i = 0; i < free; ++i) {
    phi[static_cast<std::size_t>(i)] = fit.coefficients(i);
    assigned += fit.coefficients(i);
  }
  phi[static_cast<std::size_t>(d - 1)] = total - assigned;
  return phi;
}

// Segments outside the coalition are replaced by the Gaussian-blurred image.
inline SegmentScores explain_kernelshap(const Classifier& classifier, const Image& image, std::size_t target,
                                        const SegmentationMap& segmentation, const ShapConfig& config) {
  config.validate();
  check_target(classifier, target);
  check_segmentation(image, segmentation);
  const int d = segmentation.segment_count();
  if (d < 2) throw InvalidArgument("KernelSHAP needs at least 2 segments, got " + std::to_string(d));
  const Image blurred = gaussian_blur(image, config.blur_kernel);
  const CoalitionGame game = [&](const std::vector<Coalition>& zs) {
    return score_perturbations(classifier, zs.size(), target, [&](std::size_t i) {
      return compose_by_segment(image, blurred, segmentation, zs[i]);
    });
  };
  return SegmentScores(kernel_shap(game, d, config));
}

}  // namespace xaidf
