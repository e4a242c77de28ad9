#include <doctest.h>

#include <bit>
#include <cstring>
#include <random>
#include <string>

#include "framecache/image_io.hpp"
#include "framecache/model.hpp"
#include "framecache/synth.hpp"
#include "framecache/weights.hpp"

using namespace framecache;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_model(text);
  } catch (const ModelError& e) {
    return e.what();
  }
  return "";
}

std::vector<std::uint8_t> bytes(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("parse_model computes blob dimensions") {
  const ModelGraph g = parse_model(
      "input 3 227 227\n"
      "c1 conv k=11 s=4 p=0 out_ch=96 in=data out=b1\n");
  CHECK(g.blob_shape("b1") == Shape{96, 55, 55});
  CHECK(g.blob_shape("data") == Shape{3, 227, 227});
  CHECK(g.output_blob() == "b1");
  REQUIRE(g.layers.size() == 1);
  CHECK(g.layers[0].geom.type == LayerType::kConvolution);
  CHECK(g.layers[0].geom.kernel == 11);
  CHECK(g.layers[0].geom.stride == 4);
}

TEST_CASE("parse_model handles every layer type, comments and reordering") {
  const ModelGraph g = parse_model(
      "# header comment\n"
      "input img 3 32 32   # named input\n"
      "\n"
      "fc1 fc out=10 in=p2 out=f\n"
      "c1 conv k=3 s=1 p=1 out_ch=8 in=img out=c1\n"
      "n1 lrn r=2 alpha=0.001 beta=0.5 bias=2 in=c1 out=n1\n"
      "a relu in=n1 out=a\n"
      "b scale factor=2 in=n1 out=b\n"
      "cat concat in=a,b out=cat\n"
      "bi bias value=-0.5 in=cat out=bi\n"
      "p2 pool k=2 s=2 mode=avg in=bi out=p2\n"
      "sm softmax in=f out=sm\n");
  CHECK(g.input_blob == "img");
  CHECK(g.blob_shape("cat") == Shape{16, 32, 32});
  CHECK(g.blob_shape("p2") == Shape{16, 16, 16});
  CHECK(g.blob_shape("f") == Shape{10, 1, 1});
  CHECK(g.output_blob() == "sm");
  // Topological order: fc1 runs after p2 even though declared first.
  CHECK(g.layers.front().name == "c1");
  CHECK(g.declaration_order().front()->name == "fc1");
  const LayerSpec& lrn = g.layers[1];
  CHECK(lrn.lrn_alpha == doctest::Approx(0.001));
  CHECK(lrn.geom.radius == 2);
  CHECK(g.parameter_count() == (8 * 3 * 9 + 8) + (10 * 16 * 16 * 16 + 10));
}

TEST_CASE("parse_model errors") {
  CHECK(error_of("input 3 8 8\n") == "no layers");
  CHECK(error_of("input 1 8 8\n"
                 "a relu in=b out=a\n"
                 "b relu in=a out=b\n")
            .find("cycle detected") != std::string::npos);
  CHECK(error_of("input 1 8 8\nx wobble in=data out=y\n") ==
        "line 2: unknown layer type 'wobble'");
  CHECK(error_of("input 1 8 8\n\nc conv k=3 out_ch=x in=data out=c\n")
            .rfind("line 3:", 0) == 0);
  CHECK(error_of("input 1 8 8\nc relu in=data out=c\nd relu in=data out=c\n")
            .find("duplicate producer") != std::string::npos);
  CHECK(error_of("input 1 8 8\nc conv k=9 out_ch=1 in=data out=c\n")
            .find("dimension mismatch") != std::string::npos);
  CHECK(error_of("input 1 8 8\nc relu in=nowhere out=c\n").find("unknown blob") !=
        std::string::npos);
  CHECK(error_of("input 1 8 8\nc relu in=data,data out=c\n").find("only concat") !=
        std::string::npos);
  CHECK(error_of("input 1 8 8\nc relu k=3 in=data out=c\n").find("unknown key") !=
        std::string::npos);
  CHECK(error_of("input 1 8 8\nc relu in=data\n") == "line 2: missing out=");
  CHECK(error_of("c relu in=data out=c\n").find("missing 'input") != std::string::npos);
  CHECK(error_of("input 1 8 8\nc relu in=data out=12\n").find("numeric") !=
        std::string::npos);
  CHECK(error_of("input 1 8 8\np pool k=2 mode=min in=data out=p\n")
            .find("max or avg") != std::string::npos);
  CHECK(error_of("input 1 8 8\na conv k=1 out_ch=1 in=data out=a\n"
                 "b conv k=1 out_ch=1 in=data out=b\n"
                 "p pool k=2 s=2 in=b out=p\n"
                 "c concat in=a,p out=c\n")
            .find("spatial") != std::string::npos);
}

TEST_CASE("serialize_model round-trips") {
  const std::string text =
      "input 3 32 32\n"
      "c1 conv k=3 s=2 p=1 out_ch=8 in=data out=c1\n"
      "n1 lrn r=1 alpha=1e-04 beta=0.75 bias=1 in=c1 out=n1\n"
      "s1 scale factor=0.125 in=n1 out=s1\n"
      "b1 bias value=-3.5 in=s1 out=b1\n"
      "p1 pool k=3 s=2 p=1 mode=avg in=b1 out=p1\n"
      "x1 conv k=1 s=1 p=0 out_ch=2 in=p1 out=x1\n"
      "cat concat in=p1,x1 out=cat\n"
      "f1 fc out=7 in=cat out=f1\n"
      "sm softmax in=f1 out=sm\n";
  const ModelGraph g = parse_model(text);
  const std::string again = serialize_model(g);
  CHECK(again == text);
  const ModelGraph g2 = parse_model(again);
  CHECK(g2.blobs == g.blobs);
  CHECK(g2.layers[1].lrn_alpha == g.layers[1].lrn_alpha);
  // Extra whitespace and comments do not change the serialized form.
  std::string spaced;
  for (char ch : text) spaced += ch == ' ' ? std::string("  \t") : std::string(1, ch);
  CHECK(serialize_model(parse_model("# c\n" + spaced)) == text);
  CHECK(serialize_model(g2) == again);
}

TEST_CASE("load_weights byte accounting") {
  const ModelGraph g = parse_model("input 1 4 4\nc conv k=1 out_ch=1 in=data out=c\n");
  CHECK(g.parameter_count() * 4 == 8);
  std::vector<std::uint8_t> blob(8);
  const float w = 1.5f, b = -2.0f;
  std::memcpy(blob.data(), &w, 4);  // test host is little-endian
  std::memcpy(blob.data() + 4, &b, 4);
  const WeightStore ws = load_weights(blob, g);
  CHECK(ws.at("c").weights == std::vector<float>{1.5f});
  CHECK(ws.at("c").bias == std::vector<float>{-2.0f});

  blob.pop_back();
  try {
    load_weights(blob, g);
    FAIL("expected a length mismatch");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) ==
          "weight blob length mismatch: expected 8 bytes, got 7");
  }
}

TEST_CASE("weights are little-endian float32") {
  const ModelGraph g = parse_model("input 1 1 1\nf fc out=1 in=data out=f\n");
  const std::vector<std::uint8_t> blob = {0x00, 0x00, 0x80, 0x3f,   // 1.0
                                          0x00, 0x00, 0x00, 0xc0};  // -2.0
  const WeightStore ws = load_weights(blob, g);
  CHECK(ws.at("f").weights[0] == 1.0f);
  CHECK(ws.at("f").bias[0] == -2.0f);
  CHECK(serialize_weights(ws, g) == blob);
}

TEST_CASE("weights round-trip bit-identically") {
  const ModelGraph g = demo_model(3, 24, 24, 7);
  WeightStore ws = random_weights(g, 42);
  // Include values that are easy to mangle.
  ws["conv1"].weights[0] = -0.0f;
  ws["conv1"].weights[1] = std::numeric_limits<float>::denorm_min();
  ws["fc1"].bias[0] = std::numeric_limits<float>::max();
  const auto blob = serialize_weights(ws, g);
  CHECK(static_cast<std::int64_t>(blob.size()) == g.parameter_count() * 4);
  const WeightStore back = load_weights(blob, g);
  for (const char* name : {"conv1", "conv2", "fc1"}) {
    const auto& a = ws.at(name);
    const auto& b = back.at(name);
    REQUIRE(a.weights.size() == b.weights.size());
    CHECK(std::memcmp(a.weights.data(), b.weights.data(), a.weights.size() * 4) == 0);
    CHECK(std::memcmp(a.bias.data(), b.bias.data(), a.bias.size() * 4) == 0);
  }
}

TEST_CASE("load_frame_pnm") {
  auto pgm = bytes("P5\n2 2\n255\n");
  pgm.insert(pgm.end(), {0, 64, 128, 255});
  const Frame g = load_frame_pnm(pgm);
  CHECK(g.channels() == 1);
  CHECK(g.width() == 2);
  CHECK(g.height() == 2);
  CHECK(g.storage() == std::vector<std::uint8_t>{0, 64, 128, 255});
  CHECK(g.at(0, 1, 0) == 128);

  auto ppm = bytes("P6 # comment\n2 1\n255\n");
  ppm.insert(ppm.end(), {1, 2, 3, 4, 5, 6});
  const Frame c = load_frame_pnm(ppm);
  CHECK(c.channels() == 3);
  CHECK(c.storage() == std::vector<std::uint8_t>{1, 4, 2, 5, 3, 6});

  CHECK_THROWS_WITH(load_frame_pnm(bytes("P6\n2 1\n65535\n")),
                    "pnm: unsupported maxval 65535");
  CHECK_THROWS_WITH(load_frame_pnm(bytes("P3\n2 1\n255\n")),
                    "pnm: unsupported magic (expected P5 or P6)");
  auto truncated = bytes("P5\n2 2\n255\n");
  truncated.push_back(1);
  CHECK_THROWS(load_frame_pnm(truncated));
  CHECK_THROWS(load_frame_pnm(bytes("P5\n2")));
}

TEST_CASE("PNM decode then encode is byte-identical") {
  for (int channels : {1, 3}) {
    const Frame f = textured_frame(channels, 13, 17, 3);
    const auto encoded = encode_pnm(f);
    const Frame back = load_frame_pnm(encoded);
    CHECK(back == f);
    CHECK(encode_pnm(back) == encoded);
  }
}

TEST_CASE("preprocess") {
  const Frame f = textured_frame(3, 4, 5, 1);
  const FeatureMap id = preprocess(f, std::vector<float>{0.0f}, 1.0f);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(id.data()[i] == f.data()[i]);

  const std::vector<float> half{127.5f};
  const FeatureMap norm = preprocess(Frame(1, 2, 2, std::vector<std::uint8_t>{0, 1, 254, 255}),
                                     half, 1.0f / 127.5f);
  for (float v : norm.data()) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }

  const std::vector<float> mean{104.0f, 0.0f, 0.0f};
  const FeatureMap one = preprocess(Frame(3, 1, 1, 255), mean, 0.017f);
  CHECK(one.at(0, 0, 0) == doctest::Approx(2.567).epsilon(1e-6));
  CHECK(one.at(1, 0, 0) == doctest::Approx(4.335).epsilon(1e-6));

  CHECK_THROWS(preprocess(f, std::vector<float>{1.0f, 2.0f}, 1.0f));
}
