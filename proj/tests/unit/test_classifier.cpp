#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <thread>

#include "test_classifiers.hpp"
#include "wire_server.hpp"
#include "xaidf/classifier/classifier.hpp"
#include "xaidf/classifier/model_uri.hpp"
#include "xaidf/classifier/remote.hpp"
#include "xaidf/classifier/synthetic.hpp"
#include "xaidf/classifier/wire_protocol.hpp"

using namespace xaidf;
using xaidf::testing::Fault;
using xaidf::testing::WireTestServer;

namespace {

const PlantedPatternSpec kSpec{.top = 4, .left = 6, .height = 8, .width = 10};

// (sign * P + 1) / 2 inside the region, grey elsewhere.
Image pattern_image(int sign) {
  std::vector<double> d(24 * 24 * 3, 0.5);
  for (int y = kSpec.top; y < kSpec.top + kSpec.height; ++y) {
    for (int x = kSpec.left; x < kSpec.left + kSpec.width; ++x) {
      for (int c = 0; c < 3; ++c) d[(static_cast<std::size_t>(y) * 24 + x) * 3 + c] = (sign * kSpec.pattern_at(y, x) + 1) / 2.0;
    }
  }
  return Image(24, 24, d);
}

double oracle_logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

ClassifierHandle uniform_five() {
  return std::make_shared<xaidf::testing::FunctionClassifier>(
      std::vector<std::string>{"real", "DF", "F2F", "FS", "NT"},
      [](const Image&) { return std::vector<double>(5, 0.2); });
}

}  // namespace

// ------------------------------------------------------------------ Prediction

TEST(Prediction, ValidatesInvariants) {
  const auto names = std::make_shared<const std::vector<std::string>>(std::vector<std::string>{"real", "fake"});
  EXPECT_THROW(Prediction({0.5, 0.6}, names), InvalidArgument);
  EXPECT_THROW(Prediction({-0.1, 1.1}, names), InvalidArgument);
  EXPECT_THROW(Prediction({1.0}, names), InvalidArgument);
  const auto twice = std::make_shared<const std::vector<std::string>>(std::vector<std::string>{"real", "real"});
  EXPECT_THROW(Prediction({0.5, 0.5}, twice), InvalidArgument);
  const auto none = std::make_shared<const std::vector<std::string>>(std::vector<std::string>{"a", "b"});
  EXPECT_THROW(Prediction({0.5, 0.5}, none), InvalidArgument);
  EXPECT_NO_THROW(Prediction({0.5, 0.5 + 5e-6}, names));
}

TEST(Prediction, TiesGoToLowerIndex) {
  const auto names = std::make_shared<const std::vector<std::string>>(std::vector<std::string>{"real", "fake"});
  const Prediction p({0.5, 0.5}, names);
  EXPECT_EQ(p.predicted(), 0u);
  EXPECT_TRUE(p.is_real());
}

// ------------------------------------------------------------------ synthetic detector

TEST(SyntheticDetector, ExactPatternIsConfidentlyFake) {
  const auto det = synthetic_detector(kSpec);
  const auto p = det->predict(pattern_image(+1));
  EXPECT_EQ(p.predicted_name(), "fake");
  EXPECT_NEAR(pattern_score(kSpec, pattern_image(+1)), 1.0, 1e-12);
  EXPECT_NEAR(1.0 - p.probability(1), 1.0 - oracle_logistic(40 * 0.7), 1e-15);
  EXPECT_LT(1.0 - p.probability(1), 1e-12);
}

TEST(SyntheticDetector, InversePatternIsReal) {
  const auto det = synthetic_detector(kSpec);
  const auto p = det->predict(pattern_image(-1));
  EXPECT_NEAR(pattern_score(kSpec, pattern_image(-1)), -1.0, 1e-12);
  EXPECT_NEAR(p.probability(1), oracle_logistic(-52.0), 1e-25);
  EXPECT_TRUE(p.is_real());
}

TEST(SyntheticDetector, UniformGreyIsReal) {
  const auto det = synthetic_detector(kSpec);
  const auto p = det->predict(Image::filled(24, 24, 0.5));
  EXPECT_TRUE(p.is_real());
  EXPECT_NEAR(p.probability(1), oracle_logistic(-12.0), 1e-15);
  EXPECT_NEAR(p.probability(1), 6.1e-6, 0.1e-6);
}

TEST(SyntheticDetector, ScoreAtThresholdTiesToReal) {
  PlantedPatternSpec spec = kSpec;
  spec.threshold = 0.0;
  const auto p = synthetic_detector(spec)->predict(Image::filled(24, 24, 0.5));
  EXPECT_DOUBLE_EQ(p.probability(1), 0.5);
  EXPECT_TRUE(p.is_real());
}

TEST(SyntheticDetector, BatchInvarianceAndDeterminism) {
  const auto det = synthetic_detector(kSpec);
  std::mt19937_64 rng(3);
  std::vector<Image> a, b;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> d(24 * 24 * 3);
    for (double& v : d) v = std::uniform_real_distribution<double>(0, 1)(rng);
    (i < 3 ? a : b).emplace_back(24, 24, d);
  }
  std::vector<Image> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const auto whole = det->predict_batch(ab);
  const auto pa = det->predict_batch(a);
  const auto pb = det->predict_batch(b);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(whole[i], pa[i]);
    EXPECT_EQ(whole[i + 3], pb[i]);
  }
  const std::vector<Image> twins = {a[0], a[0]};
  const auto t = det->predict_batch(twins);
  EXPECT_EQ(t[0], t[1]);
}

TEST(SyntheticDetector, LipschitzInTheRegion) {
  const auto det = synthetic_detector(kSpec);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> d(24 * 24 * 3), e;
    for (double& v : d) v = u(rng);
    e = d;
    double delta = 0.0;
    for (int y = kSpec.top; y < kSpec.top + kSpec.height; ++y) {
      for (int x = kSpec.left; x < kSpec.left + kSpec.width; ++x) {
        for (int c = 0; c < 3; ++c) {
          auto& v = e[(static_cast<std::size_t>(y) * 24 + x) * 3 + c];
          const double nv = std::clamp(v + 0.05 * (u(rng) - 0.5), 0.0, 1.0);
          delta += std::abs(nv - v);
          v = nv;
        }
      }
    }
    delta /= kSpec.height * kSpec.width * 3.0;
    const double dp = std::abs(det->predict(Image(24, 24, d)).probability(1) - det->predict(Image(24, 24, e)).probability(1));
    // |dp| <= gamma/4 * |ds| and |ds| <= 2 * mean |dx|, so gamma/2 * mean |dx| bounds it.
    EXPECT_LE(dp, 40.0 / 2.0 * delta + 1e-12);
  }
}

TEST(SyntheticDetector, RegionMustFit) {
  EXPECT_THROW(synthetic_detector(kSpec)->predict(Image::filled(8, 8, 0.5)), InvalidArgument);
  PlantedPatternSpec bad = kSpec;
  bad.height = 0;
  EXPECT_THROW(synthetic_detector(bad), InvalidArgument);
}

TEST(Classifier, BatchPreconditions) {
  const auto det = synthetic_detector(kSpec);
  EXPECT_THROW(det->predict_batch(std::vector<Image>{}), InvalidArgument);
  const std::vector<Image> mixed = {Image::filled(24, 24, 0.5), Image::filled(24, 25, 0.5)};
  EXPECT_THROW(det->predict_batch(mixed), InvalidArgument);
}

TEST(CountingClassifierTest, TalliesImages) {
  const CountingClassifier counter(synthetic_detector(kSpec));
  const std::vector<Image> batch(3, Image::filled(24, 24, 0.5));
  counter.predict_batch(batch);
  counter.predict(batch[0]);
  EXPECT_EQ(counter.images_scored(), 4u);
  EXPECT_EQ(counter.batches(), 2u);
}

// ------------------------------------------------------------------ wire encoding

TEST(Wire, RequestRoundTrip) {
  std::vector<Image> images = {Image::filled(8, 9, 0.25), Image::filled(8, 9, 0.75)};
  const auto bytes = wire::encode_request(images);
  EXPECT_EQ(std::memcmp(bytes.data(), "XDFC", 4), 0);
  EXPECT_EQ(bytes[4], 0x01);
  std::uint32_t len;
  std::memcpy(&len, bytes.data() + 5, 4);
  EXPECT_EQ(bytes.size(), 9 + len + 2 * 8 * 9 * 3 * 4);
  const auto header = nlohmann::json::parse(std::string(bytes.begin() + 9, bytes.begin() + 9 + len));
  EXPECT_EQ(header["batch"], 2);
  EXPECT_EQ(header["height"], 8);
  EXPECT_EQ(header["width"], 9);
  EXPECT_EQ(header["channels"], 3);
  EXPECT_EQ(header["dtype"], "f32");
  const auto req = wire::read_request(wire::buffer_reader(bytes));
  EXPECT_EQ(req.batch, 2u);
  EXPECT_EQ(req.image(1).data(), images[1].data());
}

TEST(Wire, ResponseDecodesAndValidates) {
  const auto bytes = wire::encode_response({"real", "fake"}, {{0.25f, 0.75f}});
  ClassNames known;
  const auto preds = wire::read_response(wire::buffer_reader(bytes), 1, known);
  ASSERT_EQ(preds.size(), 1u);
  EXPECT_EQ(preds[0].predicted_name(), "fake");
  EXPECT_EQ(known->size(), 2u);
}

TEST(Wire, ErrorOffsets) {
  const auto good = wire::encode_response({"real", "fake"}, {{0.25f, 0.75f}});
  std::uint32_t len;
  std::memcpy(&len, good.data() + 5, 4);
  const auto expect_offset = [](const wire::Bytes& b, std::size_t batch, std::size_t offset) {
    ClassNames known;
    try {
      wire::read_response(wire::buffer_reader(b), batch, known);
      ADD_FAILURE() << "no error";
    } catch (const ProtocolError& e) {
      EXPECT_EQ(e.offset(), offset) << e.what();
    }
  };
  auto b = good;
  b[0] = 'Q';
  expect_offset(b, 1, 0);
  b = good;
  b[4] = 7;
  expect_offset(b, 1, 4);
  b = good;
  std::memset(b.data() + 5, 0, 4);
  expect_offset(b, 1, 5);
  expect_offset(good, 2, 9);
  expect_offset(wire::encode_response({"a", "fake"}, {{0.25f, 0.75f}}), 1, 9);
  expect_offset(wire::encode_response({"real", "fake"}, {{0.25f, 0.25f}}), 1, 9 + len);
  const auto second_row = wire::encode_response({"real", "fake"}, {{0.5f, 0.5f}, {0.5f, -0.5f}});
  std::uint32_t len2;
  std::memcpy(&len2, second_row.data() + 5, 4);
  expect_offset(second_row, 2, 9 + len2 + 12);
}

TEST(Wire, TruncationIsTransportErrorWithByteCounts) {
  const auto good = wire::encode_response({"real", "fake"}, {{0.25f, 0.75f}});
  const wire::Bytes cut(good.begin(), good.end() - 3);
  ClassNames known;
  try {
    wire::read_response(wire::buffer_reader(cut), 1, known);
    FAIL();
  } catch (const TransportError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("received " + std::to_string(cut.size())), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected " + std::to_string(good.size())), std::string::npos) << msg;
  }
}

TEST(Wire, ClassListMustNotChange) {
  ClassNames known;
  wire::read_response(wire::buffer_reader(wire::encode_response({"real", "fake"}, {{0.5f, 0.5f}})), 1, known);
  EXPECT_THROW(wire::read_response(wire::buffer_reader(wire::encode_response({"fake", "real"}, {{0.5f, 0.5f}})), 1,
                                   known),
               ProtocolError);
}

// ------------------------------------------------------------------ remote client

TEST(Remote, EchoesUniformFiveClasses) {
  WireTestServer server(uniform_five());
  const auto remote = remote_classifier(server.endpoint());
  const auto p = remote->predict(Image::filled(8, 8, 0.3));
  ASSERT_EQ(p.probabilities().size(), 5u);
  for (double v : p.probabilities()) EXPECT_NEAR(v, 0.2, 1e-7);
  EXPECT_EQ(remote->class_names()->at(1), "DF");
}

TEST(Remote, MatchesLocalClassifier) {
  const auto local = synthetic_detector(kSpec);
  WireTestServer server(local);
  const auto remote = remote_classifier(server.endpoint());
  const std::vector<Image> batch = {pattern_image(+1), pattern_image(-1), Image::filled(24, 24, 0.5)};
  const auto r = remote->predict_batch(batch);
  const auto l = local->predict_batch(batch);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    EXPECT_EQ(r[i].predicted(), l[i].predicted());
    EXPECT_NEAR(r[i].probability(1), l[i].probability(1), 1e-6);
  }
  EXPECT_EQ(server.connections(), 1u);
}

TEST(Remote, ConcurrentCallersGetTheirOwnAnswers) {
  const auto local = synthetic_detector(kSpec);
  WireTestServer server(local);
  const auto remote = remote_classifier(server.endpoint());
  std::vector<std::thread> threads;
  std::atomic<int> wrong{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      const Image img = pattern_image(t % 2 ? 1 : -1);
      for (int i = 0; i < 10; ++i) {
        if (remote->predict(img).predicted() != local->predict(img).predicted()) ++wrong;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(wrong.load(), 0);
}

TEST(Remote, FaultsMapToDesignatedErrors) {
  const auto backend = synthetic_detector(kSpec);
  const auto img = Image::filled(24, 24, 0.5);
  const std::vector<std::pair<Fault, std::size_t>> protocol_faults = {
      {Fault::bad_magic, 0},      {Fault::bad_version, 4}, {Fault::zero_header_length, 5},
      {Fault::huge_header_length, 5}, {Fault::wrong_batch, 9}, {Fault::missing_real_class, 9}};
  for (const auto& [fault, offset] : protocol_faults) {
    WireTestServer server(backend, fault);
    const auto remote = remote_classifier(server.endpoint());
    try {
      remote->predict(img);
      ADD_FAILURE() << "fault " << static_cast<int>(fault) << " accepted";
    } catch (const ProtocolError& e) {
      EXPECT_EQ(e.offset(), offset) << e.what();
    }
  }
  for (Fault fault : {Fault::not_normalized, Fault::negative_probability, Fault::nan_probability}) {
    WireTestServer server(backend, fault);
    EXPECT_THROW(remote_classifier(server.endpoint())->predict(img), ProtocolError);
  }
}

TEST(Remote, TruncationRetriesThenFails) {
  WireTestServer server(synthetic_detector(kSpec), Fault::truncated_payload);
  RemoteOptions opts;
  opts.retries = 2;
  const auto remote = remote_classifier(server.endpoint(), opts);
  try {
    remote->predict(Image::filled(24, 24, 0.5));
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_NE(std::string(e.what()).find("expected"), std::string::npos) << e.what();
  }
  EXPECT_EQ(server.requests(), 3u);
}

TEST(Remote, RefusedConnectionIsTransportError) {
  int port;
  {
    WireTestServer server(synthetic_detector(kSpec));
    port = server.port();
  }
  RemoteOptions opts;
  opts.retries = 0;
  EXPECT_THROW(remote_classifier("127.0.0.1:" + std::to_string(port), opts)->predict(Image::filled(24, 24, 0.5)),
               TransportError);
}

TEST(Remote, EndpointParsing) {
  EXPECT_THROW(remote_classifier("localhost"), InvalidArgument);
  EXPECT_THROW(remote_classifier(":80"), InvalidArgument);
  EXPECT_THROW(remote_classifier("host:"), InvalidArgument);
  EXPECT_NO_THROW(remote_classifier("::1:8080"));
}

// ------------------------------------------------------------------ model URIs

TEST(ModelUri, SyntheticSpecs) {
  const auto p = parse_synthetic_spec("1,2,3,4,20,0.1");
  EXPECT_EQ(p.top, 1);
  EXPECT_EQ(p.left, 2);
  EXPECT_EQ(p.height, 3);
  EXPECT_EQ(p.width, 4);
  EXPECT_DOUBLE_EQ(p.gain, 20.0);
  EXPECT_DOUBLE_EQ(p.threshold, 0.1);
  EXPECT_THROW(parse_synthetic_spec("1,2,3"), InvalidArgument);
  EXPECT_THROW(parse_synthetic_spec("1,2,x,4"), InvalidArgument);
  EXPECT_THROW(open_model("onnx:model.onnx"), InvalidArgument);
  EXPECT_EQ(open_model("synthetic")->class_names()->size(), 2u);
  EXPECT_NO_THROW(open_model("remote:localhost:9"));
}
