#pragma once

#include <algorithm>
#include <span>
#include <string>

#include "xaidf/attack/nes.hpp"
#include "xaidf/error.hpp"

namespace xaidf {

// Fraction of attacked images whose final prediction is still a fake class.
inline double adversarial_accuracy(std::span<const AttackOutcome> outcomes) {
  if (outcomes.empty()) throw InvalidArgument("adversarial accuracy of an empty set");
  std::size_t still_fake = 0;
  for (const auto& o : outcomes) still_fake += o.flipped ? 0 : 1;
  return static_cast<double>(still_fake) / static_cast<double>(outcomes.size());
}

// Mean clamped drop of the predicted fake class's probability.
inline double sufficiency(std::span<const double> before, std::span<const double> after) {
  if (before.size() != after.size()) {
    throw InvalidArgument("sufficiency needs equal lengths, got " + std::to_string(before.size()) + " and " +
                          std::to_string(after.size()));
  }
  if (before.empty()) throw InvalidArgument("sufficiency of an empty set");
  double sum = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) sum += std::max(0.0, before[i] - after[i]);
  return sum / static_cast<double>(before.size());
}

}  // namespace xaidf
