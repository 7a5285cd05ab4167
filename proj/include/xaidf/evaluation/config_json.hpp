#pragma once

#include <json.hpp>

#include "xaidf/attack/nes.hpp"
#include "xaidf/explainers/explain.hpp"
#include "xaidf/imaging/slic.hpp"

// Provenance echoes of every configuration struct. Seeds are left out here;
// callers record the seed they derived everything from.
namespace xaidf {

using OrderedJson = nlohmann::ordered_json;

inline OrderedJson to_json(const SlicParams& p) {
  return {{"n_segments", p.n_segments}, {"compactness", p.compactness}, {"iterations", p.iterations}};
}

inline OrderedJson to_json(const NesConfig& c) {
  return {{"sigma", c.sigma},
          {"n_samples", c.n_samples},
          {"max_iterations", c.max_iterations},
          {"epsilon", c.max_distortion},
          {"alpha", c.learning_rate}};
}

inline OrderedJson to_json(const RiseConfig& c) {
  return {{"n_masks", c.n_masks}, {"grid", c.grid}, {"keep_prob", c.keep_prob}};
}

inline OrderedJson to_json(const LimeConfig& c) {
  return {{"n_perturbations", c.n_perturbations}, {"ridge", c.ridge}, {"kernel_width", c.kernel_width}};
}

inline OrderedJson to_json(const ShapConfig& c) {
  return {{"n_evaluations", c.n_evaluations}, {"blur_kernel", c.blur_kernel}, {"ridge", c.ridge}};
}

inline OrderedJson to_json(const SobolConfig& c) {
  return {{"grid_size", c.grid_size}, {"n_designs", c.n_designs}, {"blur_kernel", c.blur_kernel}};
}

inline OrderedJson to_json(const ExplainerConfigs& c) {
  return {{"rise", to_json(c.rise)}, {"lime", to_json(c.lime)}, {"shap", to_json(c.shap)},
          {"sobol", to_json(c.sobol)}};
}

inline OrderedJson method_config_json(Method m, const ExplainerConfigs& c) {
  switch (m) {
    case Method::rise: return to_json(c.rise);
    case Method::lime: return to_json(c.lime);
    case Method::shap: return to_json(c.shap);
    case Method::sobol: return to_json(c.sobol);
  }
  return {};
}

}  // namespace xaidf
