#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "dctdet/codec.hpp"
#include "dctdet/error.hpp"
#include "dctdet/tensor_file.hpp"
#include "dctdet/transform.hpp"
#include "plane_gen.hpp"
#include "test_support.hpp"

namespace dctdet::codec {
namespace {

using dctdet::testing::data_dir;
using dctdet::testing::random_planes;
using dctdet::testing::read_bytes;

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "<no error>";
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kUsage;
}

bool contains(const std::string& s, const std::string& what) {
  return s.find(what) != std::string::npos;
}

// Minimal hand-built file pieces, independent of encode_baseline.
struct FileBuilder {
  std::vector<std::uint8_t> bytes{0xFF, 0xD8};

  void segment(std::uint8_t code, const std::vector<std::uint8_t>& body) {
    bytes.push_back(0xFF);
    bytes.push_back(code);
    const std::size_t len = body.size() + 2;
    bytes.push_back(static_cast<std::uint8_t>(len >> 8));
    bytes.push_back(static_cast<std::uint8_t>(len & 0xFF));
    bytes.insert(bytes.end(), body.begin(), body.end());
  }
  void raw(const std::vector<std::uint8_t>& b) { bytes.insert(bytes.end(), b.begin(), b.end()); }

  void unit_dqt() {
    std::vector<std::uint8_t> body{0x00};
    body.resize(65, 1);
    segment(0xDB, body);
  }
  void gray_sof(int w, int h) {
    segment(0xC0, {8, static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h),
                   static_cast<std::uint8_t>(w >> 8), static_cast<std::uint8_t>(w), 1, 1, 0x11,
                   0});
  }
  void annex_k_luma_dht() {
    for (const auto& [cls, t] : {std::pair{0, annex_k_dc_luma()}, std::pair{1, annex_k_ac_luma()}}) {
      std::vector<std::uint8_t> body{static_cast<std::uint8_t>(cls << 4)};
      body.insert(body.end(), t.counts().begin(), t.counts().end());
      body.insert(body.end(), t.symbols().begin(), t.symbols().end());
      segment(0xC4, body);
    }
  }
  void gray_sos() { segment(0xDA, {1, 1, 0x00, 0, 63, 0}); }
};

TEST(ParseMarkers, SoiThenEoiIsMissingFrame) {
  const std::vector<std::uint8_t> bytes = {0xFF, 0xD8, 0xFF, 0xD9};
  EXPECT_TRUE(contains(error_of([&] { parse_markers(bytes); }), "missing frame header"));
  const std::vector<std::uint8_t> junk = {0x00, 0x01};
  EXPECT_TRUE(contains(error_of([&] { parse_markers(junk); }), "missing SOI"));
}

TEST(ParseMarkers, Frame420) {
  const auto bytes = read_bytes(data_dir() / "misc/yuv420_300.jpg");
  const auto s = parse_markers(bytes);
  EXPECT_EQ(s.frame.width, 300);
  EXPECT_EQ(s.frame.height, 300);
  ASSERT_EQ(s.frame.components.size(), 3u);
  EXPECT_EQ(s.frame.components[0].h, 2);
  EXPECT_EQ(s.frame.components[0].v, 2);
  EXPECT_EQ(s.frame.components[1].h, 1);
  EXPECT_EQ(s.frame.components[1].v, 1);
  EXPECT_EQ(s.frame.components[2].h, 1);
  EXPECT_EQ(s.frame.components[2].v, 1);
  EXPECT_FALSE(s.opaque_segments.empty());  // JFIF APP0
  EXPECT_EQ(s.opaque_segments.front().code, 0xE0);
  // Entropy data is raw: stuffing is still present.
  bool stuffed = false;
  for (std::size_t i = 0; i + 1 < s.entropy_data.size(); ++i) {
    stuffed = stuffed || (s.entropy_data[i] == 0xFF && s.entropy_data[i + 1] == 0x00);
  }
  EXPECT_TRUE(stuffed);
}

std::vector<std::uint8_t> patch_sof(std::vector<std::uint8_t> bytes, std::uint8_t code,
                                    int precision = 8) {
  for (std::size_t i = 0; i + 4 < bytes.size(); ++i) {
    if (bytes[i] == 0xFF && bytes[i + 1] == 0xC0) {
      bytes[i + 1] = code;
      bytes[i + 4] = static_cast<std::uint8_t>(precision);
      return bytes;
    }
  }
  throw std::runtime_error("no SOF0");
}

TEST(ParseMarkers, RejectsNonBaselineFrames) {
  const auto base = read_bytes(data_dir() / "misc/yuv420_300.jpg");
  const auto sof2 = patch_sof(base, 0xC2);
  EXPECT_TRUE(contains(error_of([&] { parse_markers(sof2); }), "unsupported: progressive"));
  EXPECT_EQ(kind_of([&] { parse_markers(sof2); }), ErrorKind::kUnsupported);

  const auto real_progressive = read_bytes(data_dir() / "misc/progressive.jpg");
  EXPECT_TRUE(contains(error_of([&] { parse_markers(real_progressive); }), "SOF2"));

  const auto p12 = patch_sof(base, 0xC0, 12);
  EXPECT_TRUE(contains(error_of([&] { parse_markers(p12); }), "12-bit"));

  const auto arith = patch_sof(base, 0xC9);
  EXPECT_TRUE(contains(error_of([&] { parse_markers(arith); }), "arithmetic"));
}

TEST(ParseMarkers, RejectsUnsupportedSampling) {
  const auto bytes = read_bytes(data_dir() / "misc/yuv422.jpg");
  EXPECT_TRUE(contains(error_of([&] { parse_markers(bytes); }), "unsupported sampling"));
  EXPECT_EQ(kind_of([&] { parse_markers(bytes); }), ErrorKind::kUnsupported);
}

TEST(ParseMarkers, TruncatedSegment) {
  auto bytes = read_bytes(data_dir() / "misc/yuv420_300.jpg");
  bytes.resize(30);
  EXPECT_TRUE(contains(error_of([&] { parse_markers(bytes); }), "truncated segment"));
}

TEST(ParseMarkers, UndefinedAndIncompatibleTables) {
  FileBuilder f;
  f.gray_sof(8, 8);
  f.annex_k_luma_dht();
  f.gray_sos();
  f.raw({0x00, 0xFF, 0xD9});
  EXPECT_TRUE(contains(error_of([&] { parse_markers(f.bytes); }), "undefined table"));

  FileBuilder g;
  g.unit_dqt();
  std::vector<std::uint8_t> other{0x00};
  other.resize(65, 2);
  g.segment(0xDB, other);
  g.raw({0xFF, 0xD9});
  EXPECT_TRUE(contains(error_of([&] { parse_markers(g.bytes); }), "duplicate incompatible table"));
}

TEST(ParseMarkers, ZeroQuantEntryRejected) {
  FileBuilder f;
  std::vector<std::uint8_t> body{0x00};
  body.resize(65, 1);
  body[10] = 0;
  f.segment(0xDB, body);
  EXPECT_THROW(parse_markers(f.bytes), Error);
}

TEST(DecodeScan, SingleZeroBlock) {
  FileBuilder f;
  f.unit_dqt();
  f.gray_sof(8, 8);
  f.annex_k_luma_dht();
  f.gray_sos();
  // DC category 0 ("00"), EOB ("1010"), padded with 1s: 0010 1011 -> 0x2B
  f.raw({0x2B, 0xFF, 0xD9});
  const auto planes = decode_scan(parse_markers(f.bytes));
  ASSERT_EQ(planes.size(), 1u);
  EXPECT_EQ(planes[0].blocks_wide, 1);
  EXPECT_EQ(planes[0].blocks_high, 1);
  for (auto v : planes[0].coeffs) EXPECT_EQ(v, 0);
}

TEST(DecodeScan, RestartResetsDcPrediction) {
  FileBuilder f;
  f.unit_dqt();
  f.gray_sof(16, 8);
  f.annex_k_luma_dht();
  f.segment(0xDD, {0x00, 0x01});
  f.gray_sos();
  // Each MCU: DC category 3 ("100"), value +5 ("101"), EOB ("1010"), pad 1s.
  f.raw({0x96, 0xBF, 0xFF, 0xD0, 0x96, 0xBF, 0xFF, 0xD9});
  const auto planes = decode_scan(parse_markers(f.bytes));
  ASSERT_EQ(planes[0].blocks_wide, 2);
  EXPECT_EQ(planes[0].block(0, 0)[0], 5);
  EXPECT_EQ(planes[0].block(1, 0)[0], 5);

  // Without the restart marker the second DC would be 5 + 5.
  FileBuilder g;
  g.unit_dqt();
  g.gray_sof(16, 8);
  g.annex_k_luma_dht();
  g.gray_sos();
  // 100 101 1010 100 101 1010 + pad
  g.raw({0x96, 0xA5, 0xAF, 0xFF, 0xD9});
  const auto chained = decode_scan(parse_markers(g.bytes));
  EXPECT_EQ(chained[0].block(1, 0)[0], 10);
}

TEST(DecodeScan, WrongRestartMarkerIsAnError) {
  FileBuilder f;
  f.unit_dqt();
  f.gray_sof(16, 8);
  f.annex_k_luma_dht();
  f.segment(0xDD, {0x00, 0x01});
  f.gray_sos();
  f.raw({0x96, 0xBF, 0xFF, 0xD3, 0x96, 0xBF, 0xFF, 0xD9});
  EXPECT_TRUE(contains(error_of([&] { decode_scan(parse_markers(f.bytes)); }),
                       "restart marker at wrong MCU index"));
}

TEST(DecodeScan, ExhaustedStreamIsAnError) {
  FileBuilder f;
  f.unit_dqt();
  f.gray_sof(16, 8);
  f.annex_k_luma_dht();
  f.gray_sos();
  f.raw({0x96, 0xBF, 0xFF, 0xD9});  // only one of two blocks present
  EXPECT_TRUE(contains(error_of([&] { decode_scan(parse_markers(f.bytes)); }), "exhaustion"));
}

TEST(DecodeScan, InvalidRunSizeSymbol) {
  // AC table holding EOB ("00") and 0x20 ("01"), a run with size 0 that is
  // neither EOB nor ZRL.
  FileBuilder f;
  f.unit_dqt();
  f.gray_sof(8, 8);
  const auto dc = annex_k_dc_luma();
  std::vector<std::uint8_t> dcb{0x00};
  dcb.insert(dcb.end(), dc.counts().begin(), dc.counts().end());
  dcb.insert(dcb.end(), dc.symbols().begin(), dc.symbols().end());
  f.segment(0xC4, dcb);
  std::vector<std::uint8_t> acb{0x10, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0x00, 0x20};
  f.segment(0xC4, acb);
  f.gray_sos();
  // DC "00", then AC "01" -> symbol 0x20.
  f.raw({0x1F, 0xFF, 0xD9});
  EXPECT_TRUE(contains(error_of([&] { decode_scan(parse_markers(f.bytes)); }), "run/size"));
}

TEST(Dequantize, Examples) {
  QuantizedPlane p;
  p.blocks_wide = p.blocks_high = 1;
  p.coeffs.assign(64, 0);
  std::array<std::uint16_t, 64> table{};
  table.fill(7);
  table[0] = 16;
  const auto q = QuantTable::from_natural(table);
  for (float v : dequantize_plane(p, q).coeffs) EXPECT_EQ(v, 0.0f);

  p.coeffs[0] = 3;
  const auto d = dequantize_plane(p, q);
  EXPECT_EQ(d.coeffs[0], 48.0f);
  for (int i = 1; i < 64; ++i) EXPECT_EQ(d.coeffs[i], 0.0f);

  std::fill(p.coeffs.begin(), p.coeffs.end(), 1);
  std::array<std::uint16_t, 64> ones{};
  ones.fill(1);
  for (float v : dequantize_plane(p, QuantTable::from_natural(ones)).coeffs) EXPECT_EQ(v, 1.0f);
}

TEST(Dequantize, ReordersTableFromZigzag) {
  // A table whose natural-order entry i is i + 1: product with all-ones
  // coefficients must follow natural order regardless of zigzag storage.
  std::array<std::uint16_t, 64> natural{};
  for (int i = 0; i < 64; ++i) natural[i] = static_cast<std::uint16_t>(i + 1);
  const auto q = QuantTable::from_natural(natural);
  EXPECT_EQ(q.zigzag[2], 9);  // zigzag position 2 is (1,0)
  QuantizedPlane p;
  p.blocks_wide = p.blocks_high = 1;
  p.coeffs.assign(64, 1);
  const auto d = dequantize_plane(p, q);
  for (int i = 0; i < 64; ++i) EXPECT_EQ(d.coeffs[i], static_cast<float>(i + 1));
}

TEST(PartialDecode, TableOneGeometry) {
  for (const char* name : {"misc/yuv420_300.jpg", "misc/yuv420_304.jpg"}) {
    const auto p = partial_decode(read_bytes(data_dir() / name));
    EXPECT_EQ(p.y.blocks_wide, 38) << name;
    EXPECT_EQ(p.y.blocks_high, 38) << name;
    ASSERT_TRUE(p.cb && p.cr);
    EXPECT_EQ(p.cb->blocks_wide, 19);
    EXPECT_EQ(p.cb->blocks_high, 19);
    EXPECT_EQ(p.cr->blocks_wide, 19);
    EXPECT_EQ(p.cr->blocks_high, 19);
  }
}

TEST(PartialDecode, CoefficientsAreIntegerProducts) {
  const auto bytes = read_bytes(data_dir() / "misc/yuv420_300_rst.jpg");
  const auto s = parse_markers(bytes);
  const auto planes = decode_scan(s);
  const auto p = partial_decode(bytes);
  const auto& q = *s.quant_tables[s.frame.components[0].quant_table];
  for (std::size_t i = 0; i < p.y.coeffs.size(); ++i) {
    const float expect = static_cast<float>(planes[0].coeffs[i]) * q.at_natural(i % 64);
    ASSERT_EQ(p.y.coeffs[i], expect);
    ASSERT_EQ(p.y.coeffs[i], std::round(p.y.coeffs[i]));
  }
  for (auto v : planes[0].coeffs) {
    ASSERT_GE(v, -2048);
    ASSERT_LE(v, 2047);
  }
}

TEST(PartialDecode, MidGrayIsAllZero) {
  const auto p = partial_decode(read_bytes(data_dir() / "misc/midgray_8x8.jpg"));
  EXPECT_EQ(p.y.blocks_wide, 1);
  EXPECT_EQ(p.y.blocks_high, 1);
  EXPECT_FALSE(p.cb.has_value());
  for (float v : p.y.coeffs) EXPECT_EQ(v, 0.0f);
}

TEST(PartialDecode, GrayscaleHasOnlyY) {
  const auto p = partial_decode(read_bytes(data_dir() / "misc/gray_300.jpg"));
  EXPECT_EQ(p.y.blocks_wide, 38);
  EXPECT_FALSE(p.cb.has_value());
  EXPECT_FALSE(p.cr.has_value());
}

TEST(BlockGrid, ShapeLawOnRandomSizes) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(1, 4096);
  for (int t = 0; t < 2000; ++t) {
    const int w = dim(rng);
    const int h = dim(rng);
    for (auto sampling : {Sampling::kGray, Sampling::k444, Sampling::k420}) {
      const auto frame = dctdet::testing::frame_for(w, h, sampling);
      for (std::size_t i = 0; i < frame.components.size(); ++i) {
        const int hf = frame.components[i].h;
        const int vf = frame.components[i].v;
        const int hmax = sampling == Sampling::k420 ? 2 : 1;
        const int cw = static_cast<int>(std::ceil(static_cast<double>(w) * hf / hmax));
        const int ch = static_cast<int>(std::ceil(static_cast<double>(h) * vf / hmax));
        const auto g = component_grid(frame, i);
        ASSERT_EQ(g.blocks_wide, static_cast<int>(std::ceil(cw / 8.0)));
        ASSERT_EQ(g.blocks_high, static_cast<int>(std::ceil(ch / 8.0)));
      }
    }
  }
}

TEST(Encode, RoundTripRandomPlanes) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> dim(1, 200);
  for (int t = 0; t < 100; ++t) {
    const auto sampling = static_cast<Sampling>(t % 3);
    const int w = dim(rng);
    const int h = dim(rng);
    const auto planes = random_planes(rng, w, h, sampling);
    auto params = EncodeParams::defaults(w, h, sampling);
    params.restart_interval = static_cast<std::uint16_t>(t % 5);
    const auto bytes = encode_baseline(planes, params);
    ASSERT_EQ(decode_scan(parse_markers(bytes)), planes) << w << "x" << h << " trial " << t;
  }
}

TEST(Encode, AllZeroBlockIsMinimalScan) {
  QuantizedPlane p;
  p.component_id = 1;
  p.blocks_wide = p.blocks_high = 1;
  p.coeffs.assign(64, 0);
  const auto bytes = encode_baseline(std::span(&p, 1), EncodeParams::defaults(8, 8, Sampling::kGray));
  const auto s = parse_markers(bytes);
  ASSERT_EQ(s.entropy_data.size(), 1u);
  EXPECT_EQ(s.entropy_data[0], 0x2B);  // "00" + "1010" + "11"
}

TEST(Encode, RestartMarkersAtIntervalBoundaries) {
  std::mt19937_64 rng(9);
  for (int mcus : {6, 8}) {
    const auto planes = random_planes(rng, 8 * mcus, 8, Sampling::kGray);
    auto params = EncodeParams::defaults(8 * mcus, 8, Sampling::kGray);
    params.restart_interval = 2;
    const auto bytes = encode_baseline(planes, params);
    const auto s = parse_markers(bytes);
    ASSERT_EQ(decode_scan(s), planes);

    // Expected stream: each 2-block interval encoded as a standalone image,
    // joined by RST0, RST1, ...
    std::vector<std::uint8_t> expect;
    for (int k = 0; k < mcus / 2; ++k) {
      QuantizedPlane chunk;
      chunk.component_id = 1;
      chunk.blocks_wide = 2;
      chunk.blocks_high = 1;
      chunk.coeffs.assign(planes[0].coeffs.begin() + k * 128, planes[0].coeffs.begin() + (k + 1) * 128);
      const auto part = encode_baseline(std::span(&chunk, 1), EncodeParams::defaults(16, 8, Sampling::kGray));
      const auto ps = parse_markers(part);
      if (k > 0) {
        expect.push_back(0xFF);
        expect.push_back(static_cast<std::uint8_t>(0xD0 + k - 1));
      }
      expect.insert(expect.end(), ps.entropy_data.begin(), ps.entropy_data.end());
    }
    EXPECT_EQ(std::vector<std::uint8_t>(s.entropy_data.begin(), s.entropy_data.end()), expect);
  }
}

TEST(Encode, RestartIntervalDoesNotChangeDecodedPlanes) {
  std::mt19937_64 rng(13);
  for (auto sampling : {Sampling::k444, Sampling::k420}) {
    const auto planes = random_planes(rng, 77, 45, sampling);
    auto params = EncodeParams::defaults(77, 45, sampling);
    const auto a = decode_scan(parse_markers(encode_baseline(planes, params)));
    params.restart_interval = 1;
    const auto b = decode_scan(parse_markers(encode_baseline(planes, params)));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, planes);
  }
}

TEST(Encode, RejectsOutOfCategoryCoefficients) {
  QuantizedPlane p;
  p.component_id = 1;
  p.blocks_wide = p.blocks_high = 1;
  p.coeffs.assign(64, 0);
  p.coeffs[1] = 1024;
  const auto params = EncodeParams::defaults(8, 8, Sampling::kGray);
  EXPECT_TRUE(contains(error_of([&] { encode_baseline(std::span(&p, 1), params); }), "category 10"));
  p.coeffs[1] = 0;
  p.coeffs[0] = 2048;
  EXPECT_TRUE(contains(error_of([&] { encode_baseline(std::span(&p, 1), params); }), "category 11"));
}

TEST(FullDecode, ConstantWhiteFromDcOnly) {
  QuantizedPlane p;
  p.component_id = 1;
  p.blocks_wide = p.blocks_high = 1;
  p.coeffs.assign(64, 0);
  p.coeffs[0] = 127;
  auto params = EncodeParams::defaults(8, 8, Sampling::kGray);
  std::array<std::uint16_t, 64> q{};
  q.fill(1);
  q[0] = 8;
  params.luma_quant = QuantTable::from_natural(q);
  const auto img = full_decode(encode_baseline(std::span(&p, 1), params));
  ASSERT_EQ(img.width, 8);
  for (auto v : img.pixels) EXPECT_EQ(v, 255);
}

TEST(FullDecode, GrayscaleHasEqualChannels) {
  const auto img = full_decode(read_bytes(data_dir() / "misc/gray_300.jpg"));
  ASSERT_EQ(img.width, 300);
  ASSERT_EQ(img.height, 300);
  for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
    ASSERT_EQ(img.pixels[i], img.pixels[i + 1]);
    ASSERT_EQ(img.pixels[i], img.pixels[i + 2]);
  }
}

TEST(FullDecode, ChromaIsReplicatedAt420) {
  // Planes with flat chroma blocks: each 2x2 luma neighbourhood shares one
  // chroma sample, so a flat-luma image has piecewise-constant colour.
  std::mt19937_64 rng(1);
  auto planes = random_planes(rng, 32, 16, Sampling::k420);
  for (auto& p : planes) {
    for (std::size_t i = 0; i < p.coeffs.size(); ++i) {
      if (i % 64 != 0) p.coeffs[i] = 0;
      else p.coeffs[i] = static_cast<std::int16_t>(p.coeffs[i] / 16);
    }
  }
  const auto img = full_decode(encode_baseline(planes, EncodeParams::defaults(32, 16, Sampling::k420)));
  EXPECT_EQ(img.width, 32);
  EXPECT_EQ(img.height, 16);
  // Pixels inside one 8x8 luma block, all mapping to one chroma block, agree.
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      for (int c = 0; c < 3; ++c) {
        ASSERT_EQ(img.pixels[(y * 32 + x) * 3 + c], img.pixels[c]);
      }
    }
  }
}

TEST(TensorFile, RoundTripAndLayout) {
  const auto bytes = read_bytes(data_dir() / "misc/yuv420_200x120.jpg");
  const auto p = partial_decode(bytes);
  std::vector<DctPlane> planes{p.y, *p.cb, *p.cr};
  std::stringstream buf;
  write_tensor_file(buf, planes);
  const std::string raw = buf.str();
  ASSERT_EQ(raw.substr(0, 4), "DCTT");
  EXPECT_EQ(raw[4], 1);
  EXPECT_EQ(raw[5], 3);
  EXPECT_EQ(static_cast<unsigned char>(raw[6]), p.y.component_id);
  EXPECT_EQ(static_cast<unsigned char>(raw[7]) | (static_cast<unsigned char>(raw[8]) << 8), 25);
  EXPECT_EQ(static_cast<unsigned char>(raw[9]) | (static_cast<unsigned char>(raw[10]) << 8), 15);
  std::size_t expect_size = 6;
  for (const auto& pl : planes) expect_size += 5 + pl.coeffs.size() * 4;
  EXPECT_EQ(raw.size(), expect_size);
  std::stringstream in(raw);
  EXPECT_EQ(read_tensor_file(in), planes);

  std::stringstream bad("DCTX");
  EXPECT_THROW(read_tensor_file(bad), Error);
}

}  // namespace
}  // namespace dctdet::codec
