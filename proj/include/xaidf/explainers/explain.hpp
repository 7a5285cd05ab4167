#pragma once

#include <array>
#include <string>
#include <string_view>
#include <variant>

#include "xaidf/error.hpp"
#include "xaidf/explainers/kernel_shap.hpp"
#include "xaidf/explainers/lime.hpp"
#include "xaidf/explainers/rise.hpp"
#include "xaidf/explainers/sobol.hpp"
#include "xaidf/imaging/segments.hpp"
#include "xaidf/seeding.hpp"

namespace xaidf {

enum class Method { rise, lime, shap, sobol };

inline constexpr std::array<Method, 4> kAllMethods = {Method::rise, Method::lime, Method::shap, Method::sobol};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::rise: return "rise";
    case Method::lime: return "lime";
    case Method::shap: return "shap";
    case Method::sobol: return "sobol";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  throw InvalidArgument("unknown explanation method \"" + std::string(name) +
                        "\"; supported: rise, lime, shap, sobol");
}

struct ExplainerConfigs {
  RiseConfig rise;
  LimeConfig lime;
  ShapConfig shap;
  SobolConfig sobol;

  void validate() const {
    rise.validate();
    lime.validate();
    shap.validate();
    sobol.validate();
  }

  // Same parameters with every explainer reseeded from one value.
  ExplainerConfigs reseeded(std::uint64_t seed) const {
    ExplainerConfigs out = *this;
    out.rise.seed = derive_seed(seed, "rise");
    out.lime.seed = derive_seed(seed, "lime");
    out.shap.seed = derive_seed(seed, "shap");
    out.sobol.seed = derive_seed(seed, "sobol");
    return out;
  }
};

// Pixel-level (RISE, SOBOL) or segment-level (LIME, SHAP) explanation.
using Explanation = std::variant<SaliencyMap, SegmentScores>;

inline Explanation explain(Method method, const Classifier& classifier, const Image& image, std::size_t target,
                           const SegmentationMap& segmentation, const ExplainerConfigs& configs) {
  switch (method) {
    case Method::rise: return explain_rise(classifier, image, target, configs.rise);
    case Method::lime: return explain_lime(classifier, image, target, segmentation, configs.lime);
    case Method::shap: return explain_kernelshap(classifier, image, target, segmentation, configs.shap);
    case Method::sobol: return explain_sobol(classifier, image, target, configs.sobol);
  }
  throw InvalidArgument("unknown method");
}

// Segment-level view: pixel maps are averaged per segment, segment scores pass through.
inline SegmentScores to_segment_scores(const Explanation& explanation, const SegmentationMap& segmentation) {
  if (const auto* map = std::get_if<SaliencyMap>(&explanation)) return score_segments(*map, segmentation);
  const auto& scores = std::get<SegmentScores>(explanation);
  if (scores.size() != static_cast<std::size_t>(segmentation.segment_count())) {
    throw InvalidArgument("segment scores do not match the segmentation");
  }
  return scores;
}

}  // namespace xaidf
