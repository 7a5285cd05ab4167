#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "xaidf/classifier/classifier.hpp"
#include "xaidf/classifier/remote.hpp"
#include "xaidf/classifier/synthetic.hpp"
#include "xaidf/error.hpp"
#include "xaidf/evaluation/synthetic_suite.hpp"

namespace xaidf {

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

template <typename T>
T parse_number(const std::string& s, const std::string& what) {
  T value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || s.empty()) throw InvalidArgument("bad " + what + " \"" + s + "\"");
  return value;
}

}  // namespace detail

/// "synthetic" (the default synthetic-suite region), "synthetic:top,left,h,w"
/// with optional ",gain[,threshold]", or "remote:host:port".
inline PlantedPatternSpec parse_synthetic_spec(std::string_view spec) {
  if (spec.empty()) return SyntheticSuiteSpec{}.pattern;
  const auto parts = detail::split(spec, ',');
  if (parts.size() < 4 || parts.size() > 6) {
    throw InvalidArgument("synthetic model spec must be top,left,height,width[,gain[,threshold]]");
  }
  PlantedPatternSpec p;
  p.top = detail::parse_number<int>(parts[0], "region top");
  p.left = detail::parse_number<int>(parts[1], "region left");
  p.height = detail::parse_number<int>(parts[2], "region height");
  p.width = detail::parse_number<int>(parts[3], "region width");
  if (parts.size() > 4) p.gain = detail::parse_number<double>(parts[4], "gain");
  if (parts.size() > 5) p.threshold = detail::parse_number<double>(parts[5], "threshold");
  p.validate();
  return p;
}

inline ClassifierHandle open_model(std::string_view uri, RemoteOptions options = {}) {
  if (uri == "synthetic") return synthetic_detector(parse_synthetic_spec({}));
  if (uri.starts_with("synthetic:")) return synthetic_detector(parse_synthetic_spec(uri.substr(10)));
  if (uri.starts_with("remote:")) return remote_classifier(std::string(uri.substr(7)), options);
  throw InvalidArgument("model must be synthetic[:top,left,h,w[,gain[,threshold]]] or remote:host:port, got \"" +
                        std::string(uri) + "\"");
}

}  // namespace xaidf
