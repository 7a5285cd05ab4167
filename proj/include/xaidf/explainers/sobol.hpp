#pragma once

#include <boost/random/sobol.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "xaidf/classifier/classifier.hpp"
#include "xaidf/error.hpp"
#include "xaidf/explainers/common.hpp"
#include "xaidf/imaging/filters.hpp"
#include "xaidf/imaging/image.hpp"

namespace xaidf {

struct SobolConfig {
  int grid_size = 8;
  int n_designs = 32;
  int blur_kernel = 128;  // rounded up to 129
  std::uint64_t seed = 0;

  void validate() const {
    if (grid_size < 1) throw InvalidArgument("SOBOL grid size must be positive");
    if (n_designs < 2) throw InvalidArgument("SOBOL needs n_designs >= 2");
    if (blur_kernel < 1) throw InvalidArgument("SOBOL blur kernel must be positive");
  }
};

using DesignMatrix = std::vector<std::vector<double>>;  // rows of d values in [0,1)

struct SobolDesign {
  DesignMatrix a;
  DesignMatrix b;
};

/// Two N x d matrices from one 2d-dimensional Sobol' sequence (A takes the
/// first d coordinates, B the rest), digitally scrambled by XOR-ing each
/// coordinate with a seed-derived 64-bit shift.
inline SobolDesign sobol_design(int d, int n, std::uint64_t seed) {
  if (d < 1 || n < 1) throw InvalidArgument("Sobol design needs d >= 1 and n >= 1");
  boost::random::sobol engine(static_cast<std::size_t>(2 * d));
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> shift(static_cast<std::size_t>(2 * d));
  for (auto& s : shift) s = rng();
  SobolDesign design{DesignMatrix(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d))),
                     DesignMatrix(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d)))};
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < 2 * d; ++k) {
      const std::uint64_t bits = static_cast<std::uint64_t>(engine()) ^ shift[static_cast<std::size_t>(k)];
      const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
      auto& row = k < d ? design.a[static_cast<std::size_t>(j)] : design.b[static_cast<std::size_t>(j)];
      row[static_cast<std::size_t>(k % d)] = u;
    }
  }
  return design;
}

// Evaluates a batch of d-dimensional masks; one value per mask.
using MaskFunction = std::function<std::vector<double>(const DesignMatrix&)>;

/// Total-order indices by the Jansen estimator:
///   T_i = (1/2N) sum_j (f(A_j) - f(AB_i,j))^2 / Var(f over A and B rows)
/// where AB_i is A with column i taken from B. T_i = 0 when the variance is 0.
/// Evaluates f on N * (d + 2) masks: A, B, then AB_0 .. AB_{d-1}.
inline std::vector<double> sobol_total_indices(const MaskFunction& f, int d, int n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("Sobol estimator needs n >= 2");
  const auto design = sobol_design(d, n, seed);
  DesignMatrix masks;
  masks.reserve(static_cast<std::size_t>(n) * (d + 2));
  masks.insert(masks.end(), design.a.begin(), design.a.end());
  masks.insert(masks.end(), design.b.begin(), design.b.end());
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < n; ++j) {
      auto row = design.a[static_cast<std::size_t>(j)];
      row[static_cast<std::size_t>(i)] = design.b[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      masks.push_back(std::move(row));
    }
  }
  const auto values = f(masks);
  if (values.size() != masks.size()) throw InvalidArgument("mask function returned the wrong number of values");

  const auto un = static_cast<std::size_t>(n);
  double mean = 0.0;
  for (std::size_t j = 0; j < 2 * un; ++j) mean += values[j];
  mean /= static_cast<double>(2 * un);
  double variance = 0.0;
  for (std::size_t j = 0; j < 2 * un; ++j) variance += (values[j] - mean) * (values[j] - mean);
  variance /= static_cast<double>(2 * un);

  std::vector<double> total(static_cast<std::size_t>(d), 0.0);
  if (!(variance > 0.0)) return total;
  for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < un; ++j) {
      const double diff = values[j] - values[(2 + i) * un + j];
      acc += diff * diff;
    }
    total[i] = acc / (2.0 * static_cast<double>(un)) / variance;
  }
  return total;
}

// x * m_up + blur(x) * (1 - m_up) with m_up the bilinear upsampling of the grid mask.
inline Image sobol_perturbation(const Image& image, const Image& blurred, const std::vector<double>& mask, int grid) {
  const SaliencyMap up = upsample_bilinear(SaliencyMap(grid, grid, mask), image.height(), image.width());
  const auto mv = up.values();
  std::vector<double> data(image.size());
  for (std::size_t p = 0; p < mv.size(); ++p) {
    for (int c = 0; c < kChannels; ++c) {
      const std::size_t i = p * kChannels + c;
      data[i] = image.data()[i] * mv[p] + blurred.data()[i] * (1.0 - mv[p]);
    }
  }
  return Image::clamped(image.height(), image.width(), std::move(data));
}

// Upsampled grid of total-order indices.
inline SaliencyMap explain_sobol(const Classifier& classifier, const Image& image, std::size_t target,
                                 const SobolConfig& config) {
  config.validate();
  check_target(classifier, target);
  if (config.grid_size > image.height() || config.grid_size > image.width()) {
    throw InvalidArgument("image is smaller than the SOBOL grid");
  }
  const int d = config.grid_size * config.grid_size;
  const Image blurred = gaussian_blur(image, config.blur_kernel);
  const MaskFunction f = [&](const DesignMatrix& masks) {
    return score_perturbations(classifier, masks.size(), target, [&](std::size_t i) {
      return sobol_perturbation(image, blurred, masks[i], config.grid_size);
    });
  };
  auto indices = sobol_total_indices(f, d, config.n_designs, config.seed);
  return upsample_bilinear(SaliencyMap(config.grid_size, config.grid_size, std::move(indices)), image.height(),
                           image.width());
}

}  // namespace xaidf
