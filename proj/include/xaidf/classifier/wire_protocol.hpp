#pragma once

// Binary framing shared by the remote classifier client and any serving stack.
//
//   request  := "XDFC" 0x01 u32le(header_len) header_json f32le[B*H*W*3]
//   header   := {"batch": B, "height": H, "width": W, "channels": 3, "dtype": "f32"}
//   response := "XDFR" 0x01 u32le(header_len) header_json f32le[B*C]
//   header   := {"classes": [...C names...], "batch": B}
//
// Pixels are row-major with RGB interleaved. One request per message; the
// server answers in order.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "xaidf/classifier/classifier.hpp"
#include "xaidf/error.hpp"
#include "xaidf/imaging/image.hpp"

namespace xaidf::wire {

static_assert(std::endian::native == std::endian::little, "wire encoding assumes a little-endian host");

inline constexpr std::array<char, 4> kRequestMagic = {'X', 'D', 'F', 'C'};
inline constexpr std::array<char, 4> kResponseMagic = {'X', 'D', 'F', 'R'};
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kPrefixSize = 9;  // magic + version + u32 length
inline constexpr std::uint32_t kMaxHeaderSize = 1u << 20;

using Bytes = std::vector<std::uint8_t>;

// Pulls exactly `n` more bytes from a stream; throws TransportError on EOF.
using ReadExact = std::function<void(std::uint8_t* dst, std::size_t n)>;

namespace detail {

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32(Bytes& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

inline float get_f32(const std::uint8_t* p) {
  const std::uint32_t bits = get_u32(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

inline Bytes frame(const std::array<char, 4>& magic, const std::string& header) {
  Bytes out(magic.begin(), magic.end());
  out.push_back(kVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  return out;
}

struct Header {
  nlohmann::json json;
  std::size_t end_offset;  // byte offset where the payload starts
};

// Reads the fixed prefix and the JSON header.
inline Header read_header(const ReadExact& read, const std::array<char, 4>& magic) {
  std::uint8_t prefix[kPrefixSize];
  read(prefix, kPrefixSize);
  if (std::memcmp(prefix, magic.data(), 4) != 0) {
    throw ProtocolError("bad magic, expected \"" + std::string(magic.data(), 4) + "\"", 0);
  }
  if (prefix[4] != kVersion) {
    throw ProtocolError("unsupported protocol version " + std::to_string(prefix[4]), 4);
  }
  const std::uint32_t len = get_u32(prefix + 5);
  if (len == 0 || len > kMaxHeaderSize) {
    throw ProtocolError("malformed header length " + std::to_string(len), 5);
  }
  std::string header(len, '\0');
  read(reinterpret_cast<std::uint8_t*>(header.data()), len);
  try {
    auto j = nlohmann::json::parse(header);
    if (!j.is_object()) throw ProtocolError("header is not a JSON object", kPrefixSize);
    return {std::move(j), kPrefixSize + len};
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("header is not valid JSON: ") + e.what(), kPrefixSize + e.byte);
  }
}

inline std::uint64_t header_uint(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    throw ProtocolError(std::string("header field \"") + key + "\" missing or not an unsigned integer",
                        kPrefixSize);
  }
  return it->get<std::uint64_t>();
}

}  // namespace detail

// Reader over an in-memory buffer; truncation reports bytes received vs expected.
inline ReadExact buffer_reader(std::span<const std::uint8_t> buffer) {
  auto pos = std::make_shared<std::size_t>(0);
  return [buffer, pos](std::uint8_t* dst, std::size_t n) {
    const std::size_t available = buffer.size() - *pos;
    if (available < n) {
      throw TransportError("stream ended: received " + std::to_string(*pos + available) +
                           " bytes, expected " + std::to_string(*pos + n));
    }
    std::memcpy(dst, buffer.data() + *pos, n);
    *pos += n;
  };
}

inline Bytes encode_request(std::span<const Image> images) {
  if (images.empty()) throw InvalidArgument("cannot encode an empty batch");
  const int h = images.front().height();
  const int w = images.front().width();
  nlohmann::ordered_json header = {
      {"batch", images.size()}, {"height", h}, {"width", w}, {"channels", kChannels}, {"dtype", "f32"}};
  Bytes out = detail::frame(kRequestMagic, header.dump());
  out.reserve(out.size() + images.size() * images.front().size() * 4);
  for (const auto& img : images) {
    if (!img.same_shape(images.front())) throw InvalidArgument("batch images must share dimensions");
    for (double v : img.values()) detail::put_f32(out, static_cast<float>(v));
  }
  return out;
}

struct Request {
  std::size_t batch = 0;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // batch * height * width * 3

  Image image(std::size_t i) const {
    const std::size_t stride = static_cast<std::size_t>(height) * width * kChannels;
    std::vector<double> data(pixels.begin() + static_cast<std::ptrdiff_t>(i * stride),
                             pixels.begin() + static_cast<std::ptrdiff_t>((i + 1) * stride));
    return Image::clamped(height, width, std::move(data));
  }
};

inline Request read_request(const ReadExact& read) {
  const auto header = detail::read_header(read, kRequestMagic).json;
  Request req;
  req.batch = detail::header_uint(header, "batch");
  req.height = static_cast<int>(detail::header_uint(header, "height"));
  req.width = static_cast<int>(detail::header_uint(header, "width"));
  if (detail::header_uint(header, "channels") != kChannels) {
    throw ProtocolError("channels must be 3", kPrefixSize);
  }
  if (header.value("dtype", std::string()) != "f32") throw ProtocolError("dtype must be \"f32\"", kPrefixSize);
  const std::size_t count = req.batch * static_cast<std::size_t>(req.height) * req.width * kChannels;
  Bytes payload(count * 4);
  read(payload.data(), payload.size());
  req.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i) req.pixels[i] = detail::get_f32(payload.data() + 4 * i);
  return req;
}

inline Bytes encode_response(const std::vector<std::string>& classes,
                             const std::vector<std::vector<float>>& probabilities) {
  nlohmann::ordered_json header = {{"classes", classes}, {"batch", probabilities.size()}};
  Bytes out = detail::frame(kResponseMagic, header.dump());
  for (const auto& row : probabilities) {
    if (row.size() != classes.size()) throw InvalidArgument("probability row length differs from class count");
    for (float p : row) detail::put_f32(out, p);
  }
  return out;
}

/// Decodes and validates a response for a request of `expected_batch` images.
/// The returned predictions already satisfy every Prediction invariant;
/// anything off-contract is a ProtocolError carrying the byte offset.
inline std::vector<Prediction> read_response(const ReadExact& read, std::size_t expected_batch,
                                             ClassNames& known_classes) {
  const auto [header, payload_offset] = detail::read_header(read, kResponseMagic);
  const std::size_t batch = detail::header_uint(header, "batch");
  if (batch != expected_batch) {
    throw ProtocolError("response batch " + std::to_string(batch) + " does not match request batch " +
                            std::to_string(expected_batch),
                        kPrefixSize);
  }
  const auto classes_it = header.find("classes");
  if (classes_it == header.end() || !classes_it->is_array() || classes_it->empty()) {
    throw ProtocolError("header field \"classes\" missing or empty", kPrefixSize);
  }
  std::vector<std::string> classes;
  for (const auto& c : *classes_it) {
    if (!c.is_string()) throw ProtocolError("class names must be strings", kPrefixSize);
    classes.push_back(c.get<std::string>());
  }
  try {
    real_class_index(classes);
  } catch (const InvalidArgument& e) {
    throw ProtocolError(e.what(), kPrefixSize);
  }
  if (!known_classes) {
    known_classes = std::make_shared<const std::vector<std::string>>(classes);
  } else if (*known_classes != classes) {
    throw ProtocolError("class list changed between responses", kPrefixSize);
  }

  const std::size_t n_classes = classes.size();
  Bytes payload(batch * n_classes * 4);
  read(payload.data(), payload.size());

  std::vector<Prediction> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    std::vector<double> probs(n_classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      const std::size_t at = (b * n_classes + c) * 4;
      const float p = detail::get_f32(payload.data() + at);
      if (!std::isfinite(p) || p < 0.0f) {
        throw ProtocolError("probability is negative or not finite", payload_offset + at);
      }
      probs[c] = p;
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
      throw ProtocolError("probabilities of batch item " + std::to_string(b) + " sum to " + std::to_string(sum),
                          payload_offset + b * n_classes * 4);
    }
    out.emplace_back(std::move(probs), known_classes);
  }
  return out;
}

}  // namespace xaidf::wire
